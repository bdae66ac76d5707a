#pragma once

#include "fracheat/kernel_bounds.hpp"
#include "fracheat/weakdual.hpp"

#include <map>
#include <random>
#include <sstream>
#include <string>

namespace fracheat::testing {

/// Eigen-system cache shared by the tests of one binary; modes = 0 keeps the full spectrum.
inline const EigenSystem& cached_system(OperatorKind kind, double s, int n, int dim = 1) {
    static std::map<std::string, EigenSystem> cache;
    std::ostringstream key;
    key << to_string(kind) << ':' << s << ':' << n << ':' << dim;
    auto it = cache.find(key.str());
    if (it == cache.end()) {
        const DiscreteOperator op = assemble(kind, build_grid(dim, n), s);
        it = cache.emplace(key.str(), eigendecompose(op, op.matrix.rows())).first;
    }
    return it->second;
}

inline Field random_field(const Grid& grid, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Field u(grid.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = dist(rng);
    return u;
}

struct OperatorCase {
    OperatorKind kind;
    double s;
};

inline std::string case_name(const OperatorCase& c) {
    std::ostringstream os;
    os << to_string(c.kind) << '_' << static_cast<int>(c.s * 100);
    return os.str();
}

}  // namespace fracheat::testing
