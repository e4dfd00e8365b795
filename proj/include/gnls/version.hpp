#ifndef GNLS_VERSION_HPP
#define GNLS_VERSION_HPP

#define GNLS_VERSION "0.1.0"

#endif  // GNLS_VERSION_HPP
