#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "forward.hpp"
#include "rng.hpp"

namespace diffbound {

/// Axis-aligned box [lo_i, hi_i] in R^D.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    static Box cube(int dim, double lo, double hi) {
        return Box{Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
    }

    void check() const {
        if (lo.size() == 0 || lo.size() != hi.size()) throw std::invalid_argument("box: empty or inconsistent");
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw std::invalid_argument("box: unbounded");
            if (lo[i] > hi[i]) throw std::invalid_argument("box: lo > hi");
        }
    }

    bool contains(const Point& x) const {
        return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    Point clamp(const Point& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

    void clamp_inplace(Batch& xs) const {
        for (Eigen::Index j = 0; j < xs.cols(); ++j) xs.col(j) = xs.col(j).cwiseMax(lo).cwiseMin(hi);
    }

    Point sample(Rng& rng) const {
        Point x(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
        return x;
    }

    bool operator==(const Box& o) const {
        return lo.size() == o.lo.size() && hi.size() == o.hi.size() && lo == o.lo && hi == o.hi;
    }
};

/// Euclidean length of the box diagonal (its diameter).
inline double domain_diameter(const Box& box) {
    box.check();
    return (box.hi - box.lo).norm();
}

struct SampleSet {
    std::vector<Point> points;
    int dim = 0;
    std::string source;      // generator name
    nlohmann::json params;   // generator parameters
    std::uint64_t seed = 0;
    std::optional<Box> box;

    std::size_t size() const { return points.size(); }

    Batch as_batch() const {
        Batch b(dim, static_cast<Eigen::Index>(points.size()));
        for (std::size_t j = 0; j < points.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = points[j];
        return b;
    }

    static SampleSet from_points(std::vector<Point> pts, std::string source = "points") {
        SampleSet s;
        s.dim = pts.empty() ? 0 : static_cast<int>(pts.front().size());
        for (const auto& p : pts)
            if (p.size() != s.dim || !p.allFinite()) throw std::invalid_argument("sample set: bad point");
        s.points = std::move(pts);
        s.source = std::move(source);
        return s;
    }
};

/// n iid points uniform on [-side/2, side/2]^2.
inline SampleSet uniform_square(std::size_t n, double side, Rng& rng, std::uint64_t seed = 0) {
    if (n < 1) throw std::invalid_argument("uniform_square: n must be >= 1");
    if (!(side > 0)) throw std::invalid_argument("uniform_square: side must be > 0");
    SampleSet s;
    s.dim = 2;
    s.source = "uniform_square";
    s.params = {{"side", side}};
    s.seed = seed;
    s.box = Box::cube(2, -side / 2, side / 2);
    s.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.points.push_back(s.box->sample(rng));
    return s;
}

/// n iid points uniform on the circle of the given radius centred at the origin,
/// inside the box [-half, half]^2. A singular measure (no density).
inline SampleSet uniform_circle(std::size_t n, double radius, double half, Rng& rng, std::uint64_t seed = 0) {
    if (n < 1) throw std::invalid_argument("uniform_circle: n must be >= 1");
    if (!(radius > 0) || radius > half) throw std::invalid_argument("uniform_circle: need 0 < radius <= half");
    SampleSet s;
    s.dim = 2;
    s.source = "uniform_circle";
    s.params = {{"radius", radius}, {"half", half}};
    s.seed = seed;
    s.box = Box::cube(2, -half, half);
    s.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        Point p(2);
        // clamp guards the last ulp of cos/sin at radius == half
        p << radius * std::cos(a), radius * std::sin(a);
        s.points.push_back(s.box->clamp(p));
    }
    return s;
}

inline double empirical_diameter(const SampleSet& s) {
    double best = 0.0;
    for (std::size_t i = 0; i < s.points.size(); ++i)
        for (std::size_t j = i + 1; j < s.points.size(); ++j) best = std::max(best, (s.points[i] - s.points[j]).norm());
    return best;
}

// ---- persistence: CSV body (one point per row) + JSON sidecar ----

inline std::string points_csv(const std::vector<Point>& pts, int dim) {
    std::string out;
    for (int i = 0; i < dim; ++i) out += (i ? ",x" : "x") + std::to_string(i);
    out += '\n';
    char buf[64];
    for (const auto& p : pts) {
        for (int i = 0; i < dim; ++i) {
            std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", p[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json sample_set_meta(const SampleSet& s) {
    nlohmann::json j = {{"n", s.size()}, {"dim", s.dim}, {"source", s.source}, {"params", s.params}, {"seed", s.seed}};
    if (s.box) j["domain_box"] = {{"lo", std::vector<double>(s.box->lo.begin(), s.box->lo.end())},
                                  {"hi", std::vector<double>(s.box->hi.begin(), s.box->hi.end())}};
    return j;
}

inline void save_sample_set(const SampleSet& s, const std::string& csv_path) {
    std::ofstream(csv_path, std::ios::binary) << points_csv(s.points, s.dim);
    std::ofstream(csv_path + ".json", std::ios::binary) << sample_set_meta(s).dump(2) << '\n';
}

inline SampleSet load_sample_set(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    std::string line;
    std::getline(in, line);
    SampleSet s;
    s.dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        Point p(s.dim);
        std::string cell;
        for (int i = 0; i < s.dim; ++i) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error(csv_path + ": short row");
            p[i] = std::stod(cell);
        }
        s.points.push_back(std::move(p));
    }
    std::ifstream meta_in(csv_path + ".json");
    if (meta_in) {
        const auto j = nlohmann::json::parse(meta_in);
        s.source = j.value("source", "");
        s.params = j.value("params", nlohmann::json::object());
        s.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("domain_box")) {
            const auto lo = j["domain_box"]["lo"].get<std::vector<double>>();
            const auto hi = j["domain_box"]["hi"].get<std::vector<double>>();
            s.box = Box{Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                        Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
        }
    }
    return s;
}

}  // namespace diffbound
