#include "tweetbag/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "tweetbag/error.hpp"

namespace tweetbag {
namespace {

class Writer {
public:
    void bytes(std::string_view s) { out_.append(s); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str32(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::string_view bytes(std::size_t n) {
        if (in_.size() - pos_ < n) throw Error("checkpoint is truncated");
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        const auto b = bytes(4);
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(b[i])} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        const auto b = bytes(8);
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(b[i])} << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str32() { return std::string(bytes(u32())); }
    bool done() const { return pos_ == in_.size(); }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model& model, const Vocabulary& vocab) {
    const auto& c = model.config();
    if (vocab.size() != c.vocab_size)
        throw Error("checkpoint: vocabulary size does not match the model");
    Writer w;
    w.bytes(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.kind));

    w.u64(c.embedding_dim);
    w.u64(c.vocab_size);
    w.u64(c.max_len);
    w.f64(c.dropout);
    w.u64(c.rnn_units);
    w.u64(c.cnn_filter_sizes.size());
    for (auto k : c.cnn_filter_sizes) w.u64(k);
    w.u64(c.cnn_filters_per_size);
    w.u64(c.tf_layers);
    w.u64(c.tf_heads);
    w.u64(c.tf_model_dim);
    w.u64(c.tf_ff_dim);
    w.u8(c.freeze_embeddings ? 1 : 0);

    w.u64(vocab.min_freq());
    w.u64(vocab.size());
    for (const auto& tok : vocab.tokens()) w.str32(tok);

    const auto params = model.parameters();
    w.u64(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        w.str32(model.parameter_names()[i]);
        const auto& shape = params[i].shape();
        w.u32(static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) w.u64(d);
        for (double v : params[i].value().values()) w.f64(v);
    }
    return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw Error("not a tweetbag checkpoint");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw Error("unsupported checkpoint version " + std::to_string(version));
    const auto kind = r.u32();
    if (kind > static_cast<std::uint32_t>(ModelKind::TinyTransformer))
        throw Error("unknown model kind tag " + std::to_string(kind));

    ModelConfig c;
    c.kind = static_cast<ModelKind>(kind);
    c.embedding_dim = r.u64();
    c.vocab_size = r.u64();
    c.max_len = r.u64();
    c.dropout = r.f64();
    c.rnn_units = r.u64();
    c.cnn_filter_sizes.resize(r.u64());
    for (auto& k : c.cnn_filter_sizes) k = r.u64();
    c.cnn_filters_per_size = r.u64();
    c.tf_layers = r.u64();
    c.tf_heads = r.u64();
    c.tf_model_dim = r.u64();
    c.tf_ff_dim = r.u64();
    c.freeze_embeddings = r.u8() != 0;
    c.validate();

    const std::size_t min_freq = r.u64();
    const std::size_t n_tokens = r.u64();
    if (n_tokens < 2) throw Error("checkpoint vocabulary lacks the reserved entries");
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        auto tok = r.str32();
        if (i >= 2) tokens.push_back(std::move(tok));
    }
    Vocabulary vocab(std::move(tokens), min_freq);

    const std::size_t n_params = r.u64();
    std::vector<std::string> names;
    std::vector<nn::Parameter> params;
    for (std::size_t i = 0; i < n_params; ++i) {
        names.push_back(r.str32());
        nn::Shape shape(r.u32());
        for (auto& d : shape) d = r.u64();
        std::vector<double> values(nn::shape_size(shape));
        for (auto& v : values) v = r.f64();
        params.emplace_back(nn::Tensor(std::move(shape), std::move(values)));
    }
    if (!r.done()) throw Error("checkpoint has trailing bytes");
    if (vocab.size() != c.vocab_size) throw Error("checkpoint vocabulary size does not match its config");
    return {Model(std::move(c), std::move(names), std::move(params)), std::move(vocab)};
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab) {
    const std::string bytes = serialize_checkpoint(model, vocab);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(read_file(path));
}

}  // namespace tweetbag
