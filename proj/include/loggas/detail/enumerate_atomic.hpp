#pragma once

#include <cmath>

#include "loggas/errors.hpp"

namespace loggas {

template <class F>
void enumerate_atomic(const BaseMeasure& atomic, std::size_t n, F f, double max_configs) {
  require(atomic.kind() == BaseMeasure::Kind::atomic, ErrorKind::configuration, "enumeration needs an atomic measure");
  const std::size_t m = atomic.atoms().size();
  require(std::pow(static_cast<double>(m), static_cast<double>(n)) <= max_configs, ErrorKind::configuration,
          "enumeration budget exceeded (m^n too large)");
  const int d = atomic.domain().d;
  std::vector<std::size_t> digit(n, 0);
  Configuration cfg(d, n);
  while (true) {
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      cfg.set(i, atomic.atoms()[digit[i]]);
      prob *= atomic.weights()[digit[i]];
    }
    f(static_cast<const Configuration&>(cfg), prob, static_cast<const std::vector<std::size_t>&>(digit));
    std::size_t i = 0;
    while (i < n && ++digit[i] == m) digit[i++] = 0;
    if (i == n) break;
  }
}

}  // namespace loggas
