#pragma once

// Binary model checkpoint, little-endian throughout:
//
//   magic "DFBCKPT\0"        8 bytes
//   version                   u32   (currently 1)
//   D, T, embed_dim, hidden, layers, activation, sigma_rule   u32 each
//   domain box                D x (lo f64, hi f64)
//   schedule table            T x (alpha f64, alpha_bar f64, sigma2 f64)
//   layer count               u32
//   per layer                 rows u32, cols u32, W row-major f64[rows*cols], b f64[rows]
//   checksum                  u64   FNV-1a over every preceding byte

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "denoiser.hpp"
#include "rng.hpp"

namespace diffbound {

inline constexpr char kCheckpointMagic[8] = {'D', 'F', 'B', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    std::string& bytes() { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    std::uint64_t u64() { return take(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    void raw(char* out, std::size_t n) {
        need(n);
        std::copy_n(bytes_.data() + pos_, n, out);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) throw std::runtime_error("checkpoint: truncated");
    }
    std::uint64_t take(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::string& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::uint64_t checksum(std::string_view bytes) { return fnv1a64(bytes); }

inline std::string serialize_model(const DiffusionModel& m) {
    m.check();
    const NetConfig& c = m.net.config();
    detail::ByteWriter w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.dim));
    w.u32(static_cast<std::uint32_t>(m.T()));
    w.u32(static_cast<std::uint32_t>(c.embed_dim));
    w.u32(static_cast<std::uint32_t>(c.hidden));
    w.u32(static_cast<std::uint32_t>(c.layers));
    w.u32(static_cast<std::uint32_t>(c.activation));
    w.u32(static_cast<std::uint32_t>(m.schedule.sigma_rule()));
    for (int i = 0; i < c.dim; ++i) {
        w.f64(m.domain_box.lo[i]);
        w.f64(m.domain_box.hi[i]);
    }
    for (int t = 1; t <= m.T(); ++t) {
        w.f64(m.schedule.alpha(t));
        w.f64(m.schedule.alpha_bar(t));
        w.f64(m.schedule.sigma2(t));
    }
    w.u32(static_cast<std::uint32_t>(m.net.layers().size()));
    for (const auto& l : m.net.layers()) {
        w.u32(static_cast<std::uint32_t>(l.W.rows()));
        w.u32(static_cast<std::uint32_t>(l.W.cols()));
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index j = 0; j < l.W.cols(); ++j) w.f64(l.W(i, j));
        for (Eigen::Index i = 0; i < l.b.size(); ++i) w.f64(l.b[i]);
    }
    w.u64(checksum(w.bytes()));
    return std::move(w.bytes());
}

inline DiffusionModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < sizeof kCheckpointMagic + 12) throw std::runtime_error("checkpoint: truncated");
    const std::size_t body = bytes.size() - 8;
    {
        const std::string stored = bytes.substr(body);
        detail::ByteReader r(stored, 8);
        if (r.u64() != checksum(std::string_view(bytes).substr(0, body))) throw std::runtime_error("checkpoint: checksum mismatch");
    }
    detail::ByteReader r(bytes, body);
    char magic[8];
    r.raw(magic, 8);
    if (!std::equal(magic, magic + 8, kCheckpointMagic)) throw std::runtime_error("checkpoint: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    NetConfig c;
    c.dim = static_cast<int>(r.u32());
    const int T = static_cast<int>(r.u32());
    c.embed_dim = static_cast<int>(r.u32());
    c.hidden = static_cast<int>(r.u32());
    c.layers = static_cast<int>(r.u32());
    const std::uint32_t act = r.u32();
    const std::uint32_t rule = r.u32();
    if (act > 2 || rule > 1) throw std::runtime_error("checkpoint: bad enum value");
    c.activation = static_cast<Activation>(act);

    DiffusionModel m;
    m.domain_box = Box{Eigen::VectorXd(c.dim), Eigen::VectorXd(c.dim)};
    for (int i = 0; i < c.dim; ++i) {
        m.domain_box.lo[i] = r.f64();
        m.domain_box.hi[i] = r.f64();
    }
    std::vector<double> alphas(static_cast<std::size_t>(T)), stored_bar(alphas.size()), stored_s2(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        alphas[i] = r.f64();
        stored_bar[i] = r.f64();
        stored_s2[i] = r.f64();
    }
    m.schedule = NoiseSchedule(alphas, static_cast<SigmaRule>(rule));
    for (int t = 1; t <= T; ++t)
        if (m.schedule.alpha_bar(t) != stored_bar[static_cast<std::size_t>(t - 1)] ||
            m.schedule.sigma2(t) != stored_s2[static_cast<std::size_t>(t - 1)])
            throw std::runtime_error("checkpoint: schedule table inconsistent at t=" + std::to_string(t));

    const std::uint32_t n_layers = r.u32();
    std::vector<Dense> layers(n_layers);
    for (auto& l : layers) {
        const std::uint32_t rows = r.u32(), cols = r.u32();
        l.W.resize(rows, cols);
        l.b.resize(rows);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) l.W(i, j) = r.f64();
        for (std::uint32_t i = 0; i < rows; ++i) l.b[i] = r.f64();
    }
    if (r.pos() != body) throw std::runtime_error("checkpoint: trailing bytes");
    m.net = DenoiserNet(c, std::move(layers));
    m.check();
    if (!m.net.all_finite()) throw std::runtime_error("checkpoint: non-finite parameters");
    return m;
}

inline void save_checkpoint(const DiffusionModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::string bytes = serialize_model(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline DiffusionModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace diffbound
