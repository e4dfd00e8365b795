#ifndef GNLS_ELLIPTIC_HPP
#define GNLS_ELLIPTIC_HPP

// Jacobi elliptic functions and elliptic integrals.
//
// Complete integrals use the arithmetic-geometric mean, the incomplete
// integral of the first kind uses Carlson's R_F, and sn/cn/dn use the
// descending Landen recursion attached to the AGM. Everything is plain
// double precision with relative accuracy at the 1e-14 level away from
// the singular endpoint k = 1.

namespace gnls::elliptic {

struct JacobiTriple {
  double sn;
  double cn;
  double dn;
};

// Complete elliptic integral of the first kind, K(k). Requires 0 <= k < 1.
double complete_K(double k);

// K(k) evaluated from the complementary modulus k' = sqrt(1-k^2).
// Preferred when k is close to 1 and k' is known without cancellation.
double complete_K_from_kprime(double kprime);

// Complete elliptic integral of the second kind, E(k). Requires 0 <= k <= 1.
double complete_E(double k);

// Incomplete elliptic integral of the first kind F(phi; k).
// Requires 0 <= k <= 1; for k = 1 additionally |phi| < pi/2.
double incomplete_F(double phi, double k);

// sn, cn, dn evaluated simultaneously. Requires 0 <= k < 1; u unrestricted
// (reduced internally modulo the real period).
JacobiTriple jacobi_sn_cn_dn(double u, double k);

// Same, with the complementary modulus supplied by the caller.
JacobiTriple jacobi_sn_cn_dn_kp(double u, double k, double kprime);

// Jacobi amplitude am(u, k), the inverse of u = F(phi; k).
double jacobi_am(double u, double k);

// dK/dk = (E - k'^2 K) / (k k'^2). Returns 0 at k = 0 (the limit).
double dK_dk(double k);

// dE/dk = (E - K) / k. Returns 0 at k = 0 (the limit).
double dE_dk(double k);

// The positive solution x0 of dn^2(x0; k) = 1 - k^2/2 on (0, K(k)),
// equal to F(pi/4; k). Marks the inflection of the dn profile.
double inflection_argument(double k);

}  // namespace gnls::elliptic

#endif  // GNLS_ELLIPTIC_HPP
