#ifndef CORENET_TENSORNET_CHECKPOINT_HPP
#define CORENET_TENSORNET_CHECKPOINT_HPP

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "corenet/pathgraph/mask.hpp"
#include "corenet/tensornet/export_dag.hpp"
#include "corenet/tensornet/network.hpp"

namespace corenet::tensornet {

// Versioned little-endian binary dump of every parameter tensor, the
// BatchNorm running statistics, and the PReLU activity mask. Doubles are
// stored as raw bit patterns, so save -> load round-trips bit-exactly.
namespace checkpoint_detail {

constexpr char kMagic[4] = {'C', 'N', 'E', 'T'};
constexpr uint32_t kVersion = 1;

class Writer {
public:
    void u8(uint8_t v) { bytes_.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void tensor(const Tensor& t) {
        u32(static_cast<uint32_t>(t.rank()));
        for (size_t d : t.shape) u64(d);
        for (double v : t.data) f64(v);
    }
    const std::vector<uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<uint8_t> bytes_;
};

class Reader {
public:
    Reader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

    uint8_t u8() { return take(1)[0]; }
    uint32_t u32() {
        const uint8_t* p = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        const uint8_t* p = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const uint32_t n = u32();
        const uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    Tensor tensor() {
        const uint32_t rank = u32();
        std::vector<size_t> shape(rank);
        for (auto& d : shape) d = static_cast<size_t>(u64());
        Tensor t(shape);
        for (double& v : t.data) v = f64();
        return t;
    }
    size_t pos() const { return pos_; }
    size_t remaining() const { return bytes_.size() - pos_; }
    const std::vector<uint8_t>& bytes() const { return bytes_; }

private:
    const uint8_t* take(size_t n) {
        if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
        const uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::vector<uint8_t> bytes_;
    size_t pos_ = 0;
};

inline uint64_t fnv1a(const uint8_t* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace checkpoint_detail

inline void save_checkpoint(Network& net, const std::string& path) {
    using namespace checkpoint_detail;
    Writer body;

    auto params = net.parameters();
    body.u64(params.size());
    for (Parameter* p : params) {
        body.str(p->name);
        body.tensor(p->value);
        body.u8(p->frozen ? 1 : 0);
        body.u8(p->decay_exempt ? 1 : 0);
        body.u8(p->frozen_mask.empty() ? 0 : 1);
        if (!p->frozen_mask.empty())
            for (uint8_t b : p->frozen_mask) body.u8(b);
    }

    // BatchNorm running stats
    std::vector<BatchNorm*> bns;
    for (auto& layer : net.layers)
        if (auto* bn = dynamic_cast<BatchNorm*>(layer.get())) bns.push_back(bn);
    body.u64(bns.size());
    for (BatchNorm* bn : bns) {
        body.str(bn->name());
        body.tensor(bn->running_mean());
        body.tensor(bn->running_var());
    }

    // PReLU activity mask (empty when the net still has ReLU placeholders)
    const auto prelus = net.prelu_layers();
    body.u64(prelus.size());
    for (ChannelPRelu* prelu : prelus) {
        body.u64(prelu->channels());
        for (uint8_t b : prelu->channel_active()) body.u8(b);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    Writer head;
    head.u32(kVersion);
    out.write(reinterpret_cast<const char*>(head.bytes().data()),
              static_cast<std::streamsize>(head.bytes().size()));
    out.write(reinterpret_cast<const char*>(body.bytes().data()),
              static_cast<std::streamsize>(body.bytes().size()));
    uint64_t digest = fnv1a(reinterpret_cast<const uint8_t*>(kMagic), 4);
    digest = fnv1a(head.bytes().data(), head.bytes().size(), digest);
    digest = fnv1a(body.bytes().data(), body.bytes().size(), digest);
    Writer tail;
    tail.u64(digest);
    out.write(reinterpret_cast<const char*>(tail.bytes().data()), 8);
    if (!out) throw IoError("write to '" + path + "' failed");
}

// Loads into a network of the same architecture: parameters are matched by
// name and shape in order.
inline void load_checkpoint(Network& net, const std::string& path) {
    using namespace checkpoint_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw IoError("'" + path + "' is not a checkpoint");
    const uint64_t stored_digest = [&] {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
        return v;
    }();
    if (fnv1a(bytes.data(), bytes.size() - 8) != stored_digest)
        throw IoError("checkpoint digest mismatch (corrupted file)");

    Reader r(std::vector<uint8_t>(bytes.begin() + 4, bytes.end() - 8));
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    auto params = net.parameters();
    const uint64_t n_params = r.u64();
    if (n_params != params.size())
        throw ShapeMismatch("checkpoint has " + std::to_string(n_params) +
                            " parameters, network has " + std::to_string(params.size()));
    for (Parameter* p : params) {
        const std::string name = r.str();
        if (name != p->name)
            throw ShapeMismatch("checkpoint parameter '" + name + "' where '" + p->name +
                                "' was expected");
        Tensor value = r.tensor();
        check_same_shape(value, p->value, "checkpoint parameter");
        p->value = std::move(value);
        p->frozen = r.u8() != 0;
        p->decay_exempt = r.u8() != 0;
        p->frozen_mask.clear();
        if (r.u8()) {
            p->frozen_mask.resize(p->value.numel());
            for (auto& b : p->frozen_mask) b = r.u8();
        }
        p->zero_grad();
    }

    std::vector<BatchNorm*> bns;
    for (auto& layer : net.layers)
        if (auto* bn = dynamic_cast<BatchNorm*>(layer.get())) bns.push_back(bn);
    const uint64_t n_bns = r.u64();
    if (n_bns != bns.size()) throw ShapeMismatch("checkpoint batchnorm count mismatch");
    for (BatchNorm* bn : bns) {
        const std::string name = r.str();
        if (name != bn->name()) throw ShapeMismatch("checkpoint batchnorm name mismatch");
        bn->running_mean() = r.tensor();
        bn->running_var() = r.tensor();
    }

    const auto prelus = net.prelu_layers();
    const uint64_t n_prelus = r.u64();
    if (n_prelus != prelus.size())
        throw ShapeMismatch("checkpoint has " + std::to_string(n_prelus) +
                            " prelu layers, network has " + std::to_string(prelus.size()));
    for (ChannelPRelu* prelu : prelus) {
        const uint64_t channels = r.u64();
        if (channels != prelu->channels()) throw ShapeMismatch("checkpoint prelu width mismatch");
        std::vector<uint8_t> flags(channels);
        for (auto& b : flags) b = r.u8();
        prelu->set_active_flags(flags);
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in checkpoint");
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_CHECKPOINT_HPP
