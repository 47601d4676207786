#include <bit>
#include <cstring>

#include "predictslums/ann.hpp"
#include "predictslums/error.hpp"
#include "predictslums/rng.hpp"
#include "predictslums/text.hpp"

namespace psl {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'L', 'U', 'M', 'A', 'N', 'N'};

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    void bytes(void* p, std::size_t n) {
        if (in_.size() - pos_ < n)
            fail(ErrorKind::Truncated, "model file truncated at byte " + std::to_string(in_.size()) + " (needed " +
                                           std::to_string(pos_ + n) + ")");
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const AnnModel& m) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(m.layers.size()));
    for (auto s : m.sizes) w.u32(static_cast<std::uint32_t>(s));
    w.f64(m.dropout_rate);
    w.u64(m.seed);
    for (double v : m.standardizer.mean) w.f64(v);
    for (double v : m.standardizer.sd) w.f64(v);
    for (const auto& layer : m.layers) {
        for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.w.cols(); ++c) w.f64(layer.w(r, c));
        for (Eigen::Index r = 0; r < layer.b.size(); ++r) w.f64(layer.b(r));
    }
    w.u64(fnv1a(w.str()));
    return std::move(w.str());
}

AnnModel deserialize_model(std::string_view bytes) {
    Reader r(bytes);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::Parse, "not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        fail(ErrorKind::Version, "model format version " + std::to_string(version) + " is not supported by this reader (version " +
                                     std::to_string(kModelFormatVersion) + ")");
    const std::uint32_t n_layers = r.u32();
    if (n_layers == 0 || n_layers > 64) fail(ErrorKind::Parse, "model file has an implausible layer count");
    AnnModel m;
    for (std::uint32_t i = 0; i <= n_layers; ++i) {
        const std::uint32_t s = r.u32();
        if (s == 0 || s > (1u << 20)) fail(ErrorKind::Parse, "model file has an implausible layer size");
        m.sizes.push_back(s);
    }
    if (m.sizes.back() != 1) fail(ErrorKind::Parse, "model output layer must have size 1");
    m.dropout_rate = r.f64();
    m.seed = r.u64();
    const std::size_t in = m.sizes.front();
    m.standardizer.mean.resize(in);
    m.standardizer.sd.resize(in);
    for (auto& v : m.standardizer.mean) v = r.f64();
    for (auto& v : m.standardizer.sd) v = r.f64();
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const auto rows = static_cast<Eigen::Index>(m.sizes[l + 1]);
        const auto cols = static_cast<Eigen::Index>(m.sizes[l]);
        DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) layer.w(i, j) = r.f64();
        for (Eigen::Index i = 0; i < rows; ++i) layer.b(i) = r.f64();
        m.layers.push_back(std::move(layer));
    }
    const std::size_t body = r.pos();
    const std::uint64_t stored = r.u64();
    if (r.pos() != bytes.size()) fail(ErrorKind::Parse, "model file has trailing bytes");
    if (stored != fnv1a(bytes.substr(0, body))) fail(ErrorKind::Checksum, "model file checksum mismatch");
    return m;
}

void save_model(const AnnModel& model, const std::string& path) { text::write_file(path, serialize_model(model)); }

AnnModel load_model(const std::string& path) { return deserialize_model(text::read_file(path)); }

}  // namespace psl
