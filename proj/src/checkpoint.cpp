#include "tcpvit/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tcpvit/grad.hpp"

namespace tcpvit {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'C', 'P', 'V'};
constexpr uint32_t kVersion = 1;

const uint32_t* crc_table() {
    static uint32_t table[256];
    static bool built = false;
    if (!built) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int bit = 0; bit < 8; ++bit) {
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            table[i] = c;
        }
        built = true;
    }
    return table;
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_f64(std::vector<uint8_t>& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) {
            throw std::runtime_error("checkpoint: truncated file");
        }
    }
    uint16_t u16() {
        need(2);
        uint16_t v = buf[pos] | (uint16_t(buf[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

uint32_t crc32_ieee(const uint8_t* data, size_t len) {
    const uint32_t* table = crc_table();
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> serialize_checkpoint(const EncoderParams& params) {
    auto tensors = collect_params(const_cast<EncoderParams&>(params));
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (auto& [name, t] : tensors) {
        if (name.size() > 0xffff) {
            throw std::invalid_argument("checkpoint: tensor name too long");
        }
        put_u16(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(3);  // ndim
        put_u64(out, static_cast<uint64_t>(t->rows));
        put_u64(out, static_cast<uint64_t>(t->cols));
        put_u64(out, static_cast<uint64_t>(t->channels));
        for (double v : t->data) put_f64(out, v);
    }
    put_u32(out, crc32_ieee(out.data(), out.size()));
    return out;
}

void deserialize_checkpoint(const std::vector<uint8_t>& bytes, EncoderParams& params) {
    if (bytes.size() < 16) {
        throw std::runtime_error("checkpoint: file too small");
    }
    const uint32_t stored_crc =
        bytes[bytes.size() - 4] | (uint32_t(bytes[bytes.size() - 3]) << 8) |
        (uint32_t(bytes[bytes.size() - 2]) << 16) |
        (uint32_t(bytes[bytes.size() - 1]) << 24);
    if (crc32_ieee(bytes.data(), bytes.size() - 4) != stored_crc) {
        throw std::runtime_error("checkpoint: CRC mismatch");
    }
    Reader r{bytes};
    if (r.str(4) != std::string(kMagic.data(), 4)) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    if (r.u32() != kVersion) {
        throw std::runtime_error("checkpoint: unsupported format version");
    }
    const uint32_t count = r.u32();
    std::map<std::string, Tensor3> loaded;
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str(r.u16());
        r.need(1);
        const uint8_t ndim = bytes[r.pos++];
        if (ndim != 3) {
            throw std::runtime_error("checkpoint: tensor " + name + " has ndim " +
                                     std::to_string(ndim));
        }
        const int64_t rows = static_cast<int64_t>(r.u64());
        const int64_t cols = static_cast<int64_t>(r.u64());
        const int64_t chans = static_cast<int64_t>(r.u64());
        Tensor3 t(rows, cols, chans);
        for (double& v : t.data) v = r.f64();
        loaded.emplace(name, std::move(t));
    }
    // Everything after the tensors must be exactly the CRC.
    if (r.pos != bytes.size() - 4) {
        throw std::runtime_error("checkpoint: trailing bytes");
    }

    auto targets = collect_params(params);
    if (targets.size() != loaded.size()) {
        throw std::runtime_error("checkpoint: tensor count " +
                                 std::to_string(loaded.size()) + " vs expected " +
                                 std::to_string(targets.size()));
    }
    for (auto& [name, t] : targets) {
        auto it = loaded.find(name);
        if (it == loaded.end()) {
            throw std::runtime_error("checkpoint: missing tensor " + name);
        }
        if (!it->second.same_shape(*t)) {
            throw std::runtime_error("checkpoint: tensor " + name + " has shape " +
                                     it->second.shape_str() + ", expected " +
                                     t->shape_str());
        }
        t->data = std::move(it->second.data);
    }
}

void save_checkpoint(const std::string& path, const EncoderParams& params) {
    const std::vector<uint8_t> bytes = serialize_checkpoint(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!out) {
        throw std::runtime_error("checkpoint: write failed for " + path);
    }
}

void load_checkpoint(const std::string& path, EncoderParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("checkpoint: cannot open " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    deserialize_checkpoint(bytes, params);
}

}  // namespace tcpvit
