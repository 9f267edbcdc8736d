#include <bit>
#include <cstring>
#include <fstream>

#include "senc/encoders.hpp"
#include "senc/errors.hpp"

namespace senc {
namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'C', 'C', 'K', 'P', 'T'};
constexpr char kEndMarker[4] = {'E', 'N', 'D', '!'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    template <typename T>
    void pod(T v) {
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
    template <typename T>
    T pod() {
        T v{};
        read(reinterpret_cast<char*>(&v), sizeof(T));
        return to_little(v);
    }
    void read(char* p, std::size_t n) {
        in_.read(p, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw CheckpointError(source_ + ": truncated checkpoint");
        }
    }
    std::string str(std::size_t limit = 1u << 26) {
        const auto n = pod<std::uint32_t>();
        if (n > limit) throw CheckpointError(source_ + ": corrupt string length");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
};

void write_strings(Writer& w, const std::vector<std::string>& items) {
    w.pod(static_cast<std::uint32_t>(items.size()));
    for (const auto& s : items) w.str(s);
}

std::vector<std::string> read_strings(Reader& r) {
    const auto n = r.pod<std::uint32_t>();
    if (n > (1u << 26)) throw CheckpointError(r.source() + ": corrupt vocabulary size");
    std::vector<std::string> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(r.str(1u << 16));
    return out;
}

struct Header {
    std::uint32_t version;
    ModelConfig config;
};

Header read_header(Reader& r) {
    char magic[8];
    r.read(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError(r.source() + ": not a checkpoint file");
    Header h;
    h.version = r.pod<std::uint32_t>();
    if (h.version != kCheckpointVersion) {
        throw CheckpointError(r.source() + ": checkpoint format version " + std::to_string(h.version) +
                              " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
    }
    try {
        h.config = ModelConfig::from_key_values(KeyValues::parse(r.str(), r.source()));
    } catch (const ConfigError& e) {
        throw CheckpointError(r.source() + ": bad config block: " + e.what());
    }
    return h;
}

}  // namespace

void save_checkpoint(const Encoder& encoder, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    Writer w(out);
    w.bytes(kMagic, sizeof kMagic);
    w.pod(kCheckpointVersion);
    w.str(encoder.config().to_key_values().serialize());
    const Vocabulary& vocab = encoder.vocab();
    w.pod(static_cast<std::int32_t>(vocab.min_count()));
    write_strings(w, vocab.unigrams());
    write_strings(w, vocab.bigrams());
    const ParameterStore& params = encoder.params();
    w.pod(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.str(p->name);
        w.pod(static_cast<std::uint32_t>(p->value.rank()));
        for (auto dim : p->value.shape()) w.pod(static_cast<std::uint64_t>(dim));
        for (float v : p->value.values()) w.pod(v);
    }
    w.bytes(kEndMarker, sizeof kEndMarker);
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

std::unique_ptr<Encoder> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    Reader r(in, path.string());
    Header h = read_header(r);
    const int min_count = r.pod<std::int32_t>();
    auto unigrams = read_strings(r);
    auto bigrams = read_strings(r);
    std::unique_ptr<Encoder> enc;
    try {
        enc = make_encoder(h.config, Vocabulary(std::move(unigrams), std::move(bigrams), min_count));
    } catch (const InputError& e) {
        throw CheckpointError(r.source() + ": " + e.what());
    }
    ParameterStore& params = enc->params();
    const auto count = r.pod<std::uint32_t>();
    if (count != params.size()) {
        throw CheckpointError(r.source() + ": holds " + std::to_string(count) + " parameters, config implies " +
                              std::to_string(params.size()));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str(4096);
        Parameter* p = params.find(name);
        if (!p) throw CheckpointError(r.source() + ": unexpected parameter " + name);
        const auto rank = r.pod<std::uint32_t>();
        if (rank > 8) throw CheckpointError(r.source() + ": corrupt rank for " + name);
        Shape shape;
        for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::size_t>(r.pod<std::uint64_t>()));
        if (shape != p->value.shape()) {
            throw CheckpointError(r.source() + ": parameter " + name + " has shape " + shape_str(shape) +
                                  ", expected " + shape_str(p->value.shape()));
        }
        for (auto& v : p->value.storage()) v = r.pod<float>();
    }
    char end[4];
    r.read(end, sizeof end);
    if (std::memcmp(end, kEndMarker, sizeof end) != 0) throw CheckpointError(r.source() + ": missing end marker");
    return enc;
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
    auto enc = load_checkpoint(path);
    CheckpointInfo info;
    info.version = kCheckpointVersion;
    info.config = enc->config();
    info.vocab_size = enc->vocab().size();
    info.bigram_vocab_size = enc->vocab().bigram_size();
    info.parameter_floats = enc->params().total_floats();
    return info;
}

std::uint64_t parameter_hash(const ParameterStore& params) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& p : params) {
        mix(p->name.data(), p->name.size());
        mix(p->value.data(), p->value.size() * sizeof(float));
    }
    return h;
}

}  // namespace senc
