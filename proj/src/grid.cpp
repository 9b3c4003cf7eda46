#include "stokeslab/grid.hpp"

#include <charconv>
#include <cmath>

#include "stokeslab/errors.hpp"

namespace stokeslab {

Grid::Grid(int n_interior) : n(n_interior) {
    if (n < 3) throw ConfigError("n: need at least 3 interior nodes per axis, got " + std::to_string(n));
    h = 1.0 / (n + 1);
}

Rect parse_rect(const std::string& text) {
    double v[4];
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
        std::size_t end = text.find(',', pos);
        if (k < 3 && end == std::string::npos)
            throw ConfigError("region: expected \"x0,x1,y0,y1\", got \"" + text + "\"");
        if (k == 3) end = text.size();
        const char* first = text.data() + pos;
        const char* last = text.data() + end;
        while (first < last && *first == ' ') ++first;
        auto [ptr, ec] = std::from_chars(first, last, v[k]);
        while (ptr < last && *ptr == ' ') ++ptr;
        if (ec != std::errc{} || ptr != last)
            throw ConfigError("region: bad number in \"" + text + "\"");
        pos = end + 1;
    }
    Rect r{v[0], v[1], v[2], v[3]};
    if (!(r.x0 < r.x1) || !(r.y0 < r.y1))
        throw ConfigError("region: empty box \"" + text + "\"");
    if (r.x0 < 0.0 || r.x1 > 1.0 || r.y0 < 0.0 || r.y1 > 1.0)
        throw ConfigError("region: box must lie inside the unit square, got \"" + text + "\"");
    return r;
}

ObservationMask::ObservationMask(const Grid& grid, const Rect& r) : rect(r) {
    if (!(r.x0 < r.x1) || !(r.y0 < r.y1)) throw ConfigError("region: empty box");
    active.assign(static_cast<std::size_t>(grid.nodes()), 0);
    for (int j = 1; j <= grid.n; ++j) {
        const double yj = grid.y(j);
        if (yj < r.y0 || yj >= r.y1) continue;
        for (int i = 1; i <= grid.n; ++i) {
            const double xi = grid.x(i);
            if (xi < r.x0 || xi >= r.x1) continue;
            active[static_cast<std::size_t>(grid.index(i, j))] = 1;
            ++count;
        }
    }
    if (count == 0) throw ConfigError("region: observation box contains no grid node");
}

ScalarField make_scalar(const Grid& grid, double fill) {
    return ScalarField{Eigen::VectorXd::Constant(grid.nodes(), fill)};
}

VectorField make_vector(const Grid& grid, double fill) {
    return VectorField{Eigen::VectorXd::Constant(grid.nodes(), fill),
                       Eigen::VectorXd::Constant(grid.nodes(), fill)};
}

namespace {

void check_size(const Grid& grid, Eigen::Index got) {
    if (got != grid.nodes())
        throw ConfigError("field: size " + std::to_string(got) + " does not match grid with " +
                          std::to_string(grid.nodes()) + " nodes");
}

double masked_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const std::vector<std::uint8_t>& active) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
        if (active[static_cast<std::size_t>(k)]) s += a[k] * b[k];
    return s;
}

}  // namespace

double inner_product(const Grid& grid, const ScalarField& a, const ScalarField& b,
                     const ObservationMask* mask) {
    check_size(grid, a.values.size());
    check_size(grid, b.values.size());
    const double w = grid.h * grid.h;
    if (!mask) return w * a.values.dot(b.values);
    return w * masked_dot(a.values, b.values, mask->active);
}

double inner_product(const Grid& grid, const VectorField& a, const VectorField& b,
                     const ObservationMask* mask) {
    check_size(grid, a.c1.size());
    check_size(grid, b.c1.size());
    check_size(grid, a.c2.size());
    check_size(grid, b.c2.size());
    const double w = grid.h * grid.h;
    if (!mask) return w * (a.c1.dot(b.c1) + a.c2.dot(b.c2));
    return w * (masked_dot(a.c1, b.c1, mask->active) + masked_dot(a.c2, b.c2, mask->active));
}

double field_norm(const Grid& grid, const ScalarField& a, const ObservationMask* mask) {
    return std::sqrt(inner_product(grid, a, a, mask));
}

double field_norm(const Grid& grid, const VectorField& a, const ObservationMask* mask) {
    return std::sqrt(inner_product(grid, a, a, mask));
}

}  // namespace stokeslab
