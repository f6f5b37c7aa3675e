#pragma once

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "mhquant/core/scan.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::core {

namespace detail {

// Skips PGM whitespace and '#' comment lines, then reads one unsigned int.
inline unsigned pgm_read_uint(std::istream& in, const std::string& path) {
    int ch = in.get();
    while (ch != EOF && (std::isspace(ch) || ch == '#')) {
        if (ch == '#')
            while (ch != EOF && ch != '\n') ch = in.get();
        ch = in.get();
    }
    if (ch == EOF || !std::isdigit(ch)) throw UnreadableImageError(path + ": bad PGM header");
    unsigned v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + static_cast<unsigned>(ch - '0');
        if (v > 1u << 24) throw UnreadableImageError(path + ": PGM header value too large");
        ch = in.get();
    }
    if (ch != EOF) in.unget();
    return v;
}

inline std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, int& width,
                                          int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path.string());
    char m0 = 0, m1 = 0;
    in.get(m0).get(m1);
    const bool ascii = (m0 == 'P' && m1 == '2');
    if (!ascii && !(m0 == 'P' && m1 == '5'))
        throw UnreadableImageError(path.string() + ": not a P2/P5 PGM");
    width = static_cast<int>(pgm_read_uint(in, path.string()));
    height = static_cast<int>(pgm_read_uint(in, path.string()));
    const unsigned maxval = pgm_read_uint(in, path.string());
    if (width < 1 || height < 1 || maxval == 0 || maxval > 255)
        throw UnreadableImageError(path.string() + ": unsupported PGM geometry or maxval");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> data(n);
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            unsigned v = pgm_read_uint(in, path.string());
            if (v > maxval) throw UnreadableImageError(path.string() + ": sample above maxval");
            data[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        in.get();  // single whitespace byte after maxval
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw UnreadableImageError(path.string() + ": truncated PGM payload");
    }
    return data;
}

inline void png_error_cb(png_structp png, png_const_charp) { png_longjmp(png, 1); }
inline void png_warn_cb(png_structp, png_const_charp) {}

struct PngRead {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWrite {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

/// Decodes an 8-bit grayscale or indexed PNG to raw per-pixel values. For
/// indexed images the palette indices themselves are returned, since they are
/// the class codes.
inline std::vector<std::uint8_t> read_png(const std::filesystem::path& path, int& width,
                                          int& height) {
    PngRead c;
    c.fp = std::fopen(path.string().c_str(), "rb");
    if (!c.fp) throw FileNotFoundError(path.string());
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
    if (!c.png) throw UnreadableImageError(path.string() + ": libpng init failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw UnreadableImageError(path.string() + ": libpng init failed");

    std::vector<std::uint8_t> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(c.png)))
        throw UnreadableImageError(path.string() + ": corrupt PNG stream");

    png_init_io(c.png, c.fp);
    png_read_info(c.png, c.info);
    const png_uint_32 w = png_get_image_width(c.png, c.info);
    const png_uint_32 h = png_get_image_height(c.png, c.info);
    const int bit_depth = png_get_bit_depth(c.png, c.info);
    const int color_type = png_get_color_type(c.png, c.info);
    if (w < 1 || h < 1 || w > (1u << 20) || h > (1u << 20))
        throw UnreadableImageError(path.string() + ": unsupported PNG dimensions");
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        if (bit_depth > 8)
            throw UnreadableImageError(path.string() + ": unsupported palette depth");
        png_set_packing(c.png);  // widen sub-byte indices to one byte each
    } else if (color_type == PNG_COLOR_TYPE_GRAY) {
        if (bit_depth != 8)
            throw UnreadableImageError(path.string() + ": only 8-bit grayscale is supported");
    } else {
        throw UnreadableImageError(path.string() +
                                   ": expected single-channel (grayscale or indexed) PNG");
    }
    png_read_update_info(c.png, c.info);
    if (png_get_rowbytes(c.png, c.info) != w)
        throw UnreadableImageError(path.string() + ": unexpected row size");

    width = static_cast<int>(w);
    height = static_cast<int>(h);
    data.resize(static_cast<std::size_t>(w) * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + static_cast<std::size_t>(y) * w;
    png_read_image(c.png, rows.data());
    png_read_end(c.png, nullptr);
    return data;
}

inline void write_png(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint8_t>& data) {
    PngWrite c;
    c.fp = std::fopen(path.string().c_str(), "wb");
    if (!c.fp) throw Error("cannot open for writing: " + path.string());
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
    if (!c.png) throw UnreadableImageError(path.string() + ": libpng init failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw UnreadableImageError(path.string() + ": libpng init failed");

    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * width);
    if (setjmp(png_jmpbuf(c.png))) throw Error("PNG write failed: " + path.string());
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_rows(c.png, c.info, rows.data());
    png_write_png(c.png, c.info, PNG_TRANSFORM_IDENTITY, nullptr);
}

}  // namespace detail

/// Loads a segmented scan from PNG or PGM (detected by content, not by file
/// extension). Pixel values are class codes and must all be valid.
inline LabeledScan load_scan(const std::filesystem::path& path, Orientation orientation,
                             const PixelSpacing& spacing) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw FileNotFoundError(path.string());
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), 8);
    probe.close();

    int width = 0, height = 0;
    std::vector<std::uint8_t> data;
    if (png_sig_cmp(sig, 0, static_cast<std::size_t>(std::max<std::streamsize>(0, 8))) == 0)
        data = detail::read_png(path, width, height);
    else if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2'))
        data = detail::read_pgm(path, width, height);
    else
        throw UnreadableImageError(path.string() + ": neither PNG nor PGM");
    return LabeledScan(width, height, std::move(data), orientation, spacing);
}

/// Writes a scan's class codes losslessly. ".png" writes 8-bit grayscale PNG,
/// ".pgm" writes binary P5; load_scan(write_scan(s)) reproduces the exact
/// label grid.
inline void write_scan(const LabeledScan& scan, const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        detail::write_png(path, scan.width(), scan.height(), scan.labels());
    } else if (ext == ".pgm") {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open for writing: " + path.string());
        out << "P5\n" << scan.width() << " " << scan.height() << "\n255\n";
        out.write(reinterpret_cast<const char*>(scan.labels().data()),
                  static_cast<std::streamsize>(scan.labels().size()));
        if (!out) throw Error("PGM write failed: " + path.string());
    } else {
        throw Error("unsupported scan extension (use .png or .pgm): " + path.string());
    }
}

}  // namespace mhquant::core
