#include "mamba/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mamba/errors.hpp"

namespace mamba {

namespace wire {

void put_u8(std::ostream& out, uint8_t v) {
    out.put(static_cast<char>(v));
}

void put_u32(std::ostream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint8_t get_u8(std::istream& in) {
    int c = in.get();
    if (c == EOF) throw IoError("unexpected end of file");
    return static_cast<uint8_t>(c);
}

uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (!in) throw IoError("unexpected end of file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (!in) throw IoError("unexpected end of file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(b[i])) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string get_string(std::istream& in) {
    uint32_t n = get_u32(in);
    if (n > (1u << 24)) throw IoError("corrupt string length in container");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw IoError("unexpected end of file");
    return s;
}

} // namespace wire

static const char kMagic[] = "FINC1";

void write_layers(std::ostream& out, const std::vector<Layer>& layers) {
    out.write(kMagic, 5);
    wire::put_u32(out, static_cast<uint32_t>(layers.size()));
    for (const Layer& l : layers) {
        wire::put_u8(out, static_cast<uint8_t>(l.kind));
        wire::put_u8(out, static_cast<uint8_t>(l.act));
        wire::put_u32(out, static_cast<uint32_t>(l.params.size()));
        for (const Param& p : l.params) {
            wire::put_string(out, p.name);
            wire::put_u8(out, p.trainable ? 0 : 1);
            wire::put_u8(out, static_cast<uint8_t>(p.value.ndim()));
            for (int d = 0; d < p.value.ndim(); ++d)
                wire::put_u32(out, static_cast<uint32_t>(p.value.dim(d)));
            for (size_t i = 0; i < p.value.size(); ++i) wire::put_f64(out, p.value[i]);
        }
    }
    if (!out) throw IoError("weights write failed");
}

std::vector<Layer> read_layers(std::istream& in) {
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kMagic, 5) != 0)
        throw IoError("not a FINC1 weights container");
    const uint32_t nlayers = wire::get_u32(in);
    if (nlayers > 4096) throw IoError("corrupt layer count");
    std::vector<Layer> layers;
    layers.reserve(nlayers);
    for (uint32_t li = 0; li < nlayers; ++li) {
        Layer l;
        l.kind = layer_kind_from_tag(wire::get_u8(in));
        l.act = activation_from_tag(wire::get_u8(in));
        const uint32_t nparams = wire::get_u32(in);
        if (nparams > 4096) throw IoError("corrupt parameter count");
        for (uint32_t pi = 0; pi < nparams; ++pi) {
            Param p;
            p.name = wire::get_string(in);
            p.trainable = wire::get_u8(in) == 0;
            const uint8_t ndim = wire::get_u8(in);
            Shape shape;
            size_t count = 1;
            for (uint8_t d = 0; d < ndim; ++d) {
                uint32_t dim = wire::get_u32(in);
                if (dim == 0 || dim > (1u << 24)) throw IoError("corrupt dimension");
                shape.push_back(static_cast<int>(dim));
                count *= dim;
            }
            std::vector<double> data(count);
            for (size_t i = 0; i < count; ++i) data[i] = wire::get_f64(in);
            p.value = Tensor(std::move(shape), std::move(data));
            l.params.push_back(std::move(p));
        }
        validate_layer(l);
        layers.push_back(std::move(l));
    }
    return layers;
}

void save_layers(const std::string& path, const std::vector<Layer>& layers) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_layers(out, layers);
}

std::vector<Layer> load_layers(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_layers(in);
}

uint64_t fnv1a_bytes(const void* data, size_t n, uint64_t seed) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    uint64_t h = 14695981039346656037ULL;
    char buf[8192];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a_bytes(buf, static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

} // namespace mamba
