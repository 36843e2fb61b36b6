#include "gravit/fits.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "gravit/errors.hpp"

namespace gravit::fits {

namespace {

constexpr size_t kBlock = 2880;
constexpr size_t kCard = 80;

uint16_t bswap16(uint16_t v) { return uint16_t((v >> 8) | (v << 8)); }
uint32_t bswap32(uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}
uint64_t bswap64(uint64_t v) {
    return (uint64_t(bswap32(uint32_t(v))) << 32) | bswap32(uint32_t(v >> 32));
}

// FITS data is big-endian on disk.
template <typename U>
U from_be(U v) {
    if constexpr (std::endian::native == std::endian::big) return v;
    if constexpr (sizeof(U) == 2) return U(bswap16(uint16_t(v)));
    if constexpr (sizeof(U) == 4) return U(bswap32(uint32_t(v)));
    if constexpr (sizeof(U) == 8) return U(bswap64(uint64_t(v)));
    return v;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t'");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t'");
    return s.substr(a, b - a + 1);
}

struct Header {
    std::map<std::string, std::string> cards;
    size_t blocks = 0;

    bool has(const std::string& k) const { return cards.count(k) > 0; }
    long get_long(const std::string& k) const { return std::stol(cards.at(k)); }
    double get_double(const std::string& k, double fallback) const {
        auto it = cards.find(k);
        return it == cards.end() ? fallback : std::stod(it->second);
    }
};

Header read_header(std::ifstream& in, const std::string& path) {
    Header h;
    std::vector<char> block(kBlock);
    bool done = false;
    while (!done) {
        in.read(block.data(), kBlock);
        if (in.gcount() != std::streamsize(kBlock)) {
            throw IngestError(IngestError::Code::bad_header,
                              fmt::format("{}: truncated FITS header", path));
        }
        ++h.blocks;
        for (size_t c = 0; c < kBlock / kCard; ++c) {
            std::string card(block.data() + c * kCard, kCard);
            std::string key = trim(card.substr(0, 8));
            if (key == "END") {
                done = true;
                break;
            }
            if (key.empty() || card.substr(8, 2) != "= ") continue;
            std::string value = card.substr(10);
            size_t slash = value.find('/');
            if (slash != std::string::npos) value = value.substr(0, slash);
            h.cards[key] = trim(value);
        }
        if (h.blocks > 1000) {
            throw IngestError(IngestError::Code::bad_header,
                              fmt::format("{}: END card not found", path));
        }
    }
    return h;
}

template <typename T>
void decode(const std::vector<char>& raw, std::vector<double>& out, double bscale,
            double bzero) {
    size_t n = raw.size() / sizeof(T);
    out.resize(n);
    for (size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
        if constexpr (sizeof(T) == 1) {
            out[i] = bzero + bscale * double(v);
        } else if constexpr (std::is_integral_v<T>) {
            using U = std::make_unsigned_t<T>;
            U u;
            std::memcpy(&u, &v, sizeof(T));
            u = from_be(u);
            T sv;
            std::memcpy(&sv, &u, sizeof(T));
            out[i] = bzero + bscale * double(sv);
        } else {
            using U = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
            U u;
            std::memcpy(&u, &v, sizeof(T));
            u = from_be(u);
            T fv;
            std::memcpy(&fv, &u, sizeof(T));
            out[i] = bzero + bscale * double(fv);
        }
    }
}

}  // namespace

RawImage read_image(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw IngestError(IngestError::Code::missing_file,
                          fmt::format("{}: no such file", path));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError(IngestError::Code::missing_file,
                          fmt::format("{}: cannot open", path));
    }

    Header h = read_header(in, path);
    if (!h.has("SIMPLE") || !h.has("BITPIX") || !h.has("NAXIS")) {
        throw IngestError(IngestError::Code::bad_header,
                          fmt::format("{}: missing SIMPLE/BITPIX/NAXIS", path));
    }

    RawImage img;
    img.bitpix = int(h.get_long("BITPIX"));
    long naxis = h.get_long("NAXIS");
    size_t count = 1;
    for (long i = 1; i <= naxis; ++i) {
        long d = h.get_long(fmt::format("NAXIS{}", i));
        if (d <= 0) {
            throw IngestError(IngestError::Code::bad_header,
                              fmt::format("{}: non-positive NAXIS{}", path, i));
        }
        img.dims.push_back(d);
        count *= size_t(d);
    }
    double bscale = h.get_double("BSCALE", 1.0);
    double bzero = h.get_double("BZERO", 0.0);

    size_t bytes_per = size_t(std::abs(img.bitpix)) / 8;
    std::vector<char> raw(count * bytes_per);
    in.read(raw.data(), std::streamsize(raw.size()));
    if (in.gcount() != std::streamsize(raw.size())) {
        throw IngestError(IngestError::Code::bad_header,
                          fmt::format("{}: truncated data array", path));
    }

    switch (img.bitpix) {
        case 8: decode<uint8_t>(raw, img.data, bscale, bzero); break;
        case 16: decode<int16_t>(raw, img.data, bscale, bzero); break;
        case 32: decode<int32_t>(raw, img.data, bscale, bzero); break;
        case -32: decode<float>(raw, img.data, bscale, bzero); break;
        case -64: decode<double>(raw, img.data, bscale, bzero); break;
        default:
            throw IngestError(IngestError::Code::bad_header,
                              fmt::format("{}: unsupported BITPIX {}", path, img.bitpix));
    }
    return img;
}

void write_cube(const std::string& path, const std::vector<double>& data, int width,
                int height, int planes, int bitpix) {
    if (bitpix != -32 && bitpix != -64) {
        throw Error(fmt::format("write_cube: unsupported BITPIX {}", bitpix));
    }
    if (data.size() != size_t(width) * size_t(height) * size_t(planes)) {
        throw Error("write_cube: data size does not match dimensions");
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("{}: cannot open for writing", path));

    auto card = [](const std::string& key, const std::string& value) {
        std::string c = fmt::format("{:<8}= {:>20}", key, value);
        c.resize(kCard, ' ');
        return c;
    };
    std::string header;
    header += card("SIMPLE", "T");
    header += card("BITPIX", fmt::format("{}", bitpix));
    header += card("NAXIS", "3");
    header += card("NAXIS1", fmt::format("{}", width));
    header += card("NAXIS2", fmt::format("{}", height));
    header += card("NAXIS3", fmt::format("{}", planes));
    std::string end = "END";
    end.resize(kCard, ' ');
    header += end;
    header.resize(((header.size() + kBlock - 1) / kBlock) * kBlock, ' ');
    out.write(header.data(), std::streamsize(header.size()));

    std::vector<char> raw;
    if (bitpix == -32) {
        raw.resize(data.size() * 4);
        for (size_t i = 0; i < data.size(); ++i) {
            float f = float(data[i]);
            uint32_t u;
            std::memcpy(&u, &f, 4);
            u = from_be(u);  // symmetric swap
            std::memcpy(raw.data() + i * 4, &u, 4);
        }
    } else {
        raw.resize(data.size() * 8);
        for (size_t i = 0; i < data.size(); ++i) {
            uint64_t u;
            std::memcpy(&u, &data[i], 8);
            u = from_be(u);
            std::memcpy(raw.data() + i * 8, &u, 8);
        }
    }
    size_t padded = ((raw.size() + kBlock - 1) / kBlock) * kBlock;
    raw.resize(padded, 0);
    out.write(raw.data(), std::streamsize(raw.size()));
    if (!out) throw Error(fmt::format("{}: write failed", path));
}

}  // namespace gravit::fits
