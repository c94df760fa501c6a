#include <array>
#include <bit>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

#include "georl/curation.hpp"

namespace georl {

namespace {

constexpr int kMaxDimension = 1 << 15;

void check_dimensions(long long w, long long h) {
    if (w <= 0 || h <= 0 || w > kMaxDimension || h > kMaxDimension)
        throw DecodeError("image dimensions " + std::to_string(w) + "x" + std::to_string(h) + " out of range");
}

// ---- PNM ----

class PnmReader {
public:
    explicit PnmReader(std::string_view bytes) : s_(bytes) {}

    long long header_int() {
        skip_space_and_comments();
        long long v = 0;
        bool any = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            v = v * 10 + (s_[pos_++] - '0');
            any = true;
            if (v > (1LL << 31)) throw DecodeError("PNM: header value too large");
        }
        if (!any) throw DecodeError("PNM: malformed header");
        return v;
    }

    // Exactly one whitespace byte separates the header from binary data.
    void skip_single_space() {
        if (pos_ >= s_.size() || !std::isspace(static_cast<unsigned char>(s_[pos_])))
            throw DecodeError("PNM: missing separator before raster");
        ++pos_;
    }

    std::string_view rest() const { return s_.substr(pos_); }
    void advance(std::size_t n) { pos_ += n; }

private:
    void skip_space_and_comments() {
        while (pos_ < s_.size()) {
            if (s_[pos_] == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::uint8_t scale_sample(long long v, long long maxval) {
    if (v < 0 || v > maxval) throw DecodeError("PNM: sample exceeds maxval");
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
}

RgbImage decode_pnm(std::string_view bytes) {
    const char kind = bytes[1];
    const bool color = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    PnmReader r(bytes.substr(2));
    const long long w = r.header_int();
    const long long h = r.header_int();
    const long long maxval = r.header_int();
    check_dimensions(w, h);
    if (maxval < 1 || maxval > 65535) throw DecodeError("PNM: maxval out of range");
    RgbImage img{static_cast<int>(w), static_cast<int>(h), {}};
    img.pixels.resize(static_cast<std::size_t>(w * h * 3));
    const int channels = color ? 3 : 1;
    const std::size_t samples = static_cast<std::size_t>(w * h * channels);
    std::vector<std::uint8_t> raw(samples);
    if (binary) {
        r.skip_single_space();
        const std::size_t width = maxval > 255 ? 2 : 1;
        std::string_view data = r.rest();
        if (data.size() < samples * width) throw DecodeError("PNM: truncated raster");
        for (std::size_t i = 0; i < samples; ++i) {
            long long v = static_cast<unsigned char>(data[i * width]);
            if (width == 2) v = (v << 8) | static_cast<unsigned char>(data[i * width + 1]);
            raw[i] = scale_sample(v, maxval);
        }
    } else {
        for (std::size_t i = 0; i < samples; ++i) raw[i] = scale_sample(r.header_int(), maxval);
    }
    for (std::size_t p = 0; p < static_cast<std::size_t>(w * h); ++p)
        for (int c = 0; c < 3; ++c) img.pixels[p * 3 + c] = raw[p * channels + (color ? c : 0)];
    return img;
}

// ---- PNG ----

struct PngSource {
    std::string_view data;
    std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
    if (src->pos + n > src->data.size()) png_error(png, "truncated PNG");
    std::memcpy(out, src->data.data() + src->pos, n);
    src->pos += n;
}

// libpng prints to stderr by default; keep the message for the exception instead.
void png_on_error(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

RgbImage decode_png(std::string_view bytes) {
    std::string message = "corrupt or unsupported stream";
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_on_error, png_on_warning);
    if (!png) throw DecodeError("PNG: cannot allocate decoder");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("PNG: cannot allocate decoder");
    }
    PngSource src{bytes};
    RgbImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("PNG: " + message);
    }
    png_set_read_fn(png, &src, png_read_from_memory);
    png_read_info(png, info);
    const auto w = png_get_image_width(png, info);
    const auto h = png_get_image_height(png, info);
    check_dimensions(w, h);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("PNG: unexpected row layout");
    }
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// ---- JPEG ----

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) { std::longjmp(reinterpret_cast<JpegError*>(cinfo->err)->jump, 1); }

RgbImage decode_jpeg(std::string_view bytes) {
    jpeg_decompress_struct cinfo;
    JpegError err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_exit;
    err.mgr.output_message = [](j_common_ptr) {};
    RgbImage img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("JPEG: corrupt or unsupported stream");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    if (cinfo.output_width == 0 || cinfo.output_height == 0 || cinfo.output_width > kMaxDimension ||
        cinfo.output_height > kMaxDimension || cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("JPEG: unsupported dimensions or components");
    }
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

RgbImage decode_image(std::string_view bytes) {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0) return decode_png(bytes);
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF && static_cast<unsigned char>(bytes[1]) == 0xD8)
        return decode_jpeg(bytes);
    if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6'))
        return decode_pnm(bytes);
    throw DecodeError("unrecognized image format");
}

RgbImage read_image_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_image(buf.str());
}

std::string encode_ppm(const RgbImage& image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    return out;
}

std::uint64_t dhash(const RgbImage& image) {
    constexpr int kCols = 9, kRows = 8;
    const long long w = image.width, h = image.height;
    if (w <= 0 || h <= 0) throw DecodeError("dhash: empty image");
    // Coordinates scaled by kCols horizontally and kRows vertically: source pixel x
    // spans [kCols x, kCols (x + 1)), output column c spans [c w, (c + 1) w).
    std::array<std::array<long long, kCols>, kRows> cell{};
    for (long long y = 0; y < h; ++y) {
        const long long y0 = y * kRows, y1 = y0 + kRows;
        for (long long x = 0; x < w; ++x) {
            const std::uint8_t* p = image.at(static_cast<int>(x), static_cast<int>(y));
            const long long luma = 299LL * p[0] + 587LL * p[1] + 114LL * p[2];
            const long long x0 = x * kCols, x1 = x0 + kCols;
            for (long long r = y0 / h; r < kRows && r * h < y1; ++r) {
                const long long oy = std::min(y1, (r + 1) * h) - std::max(y0, r * h);
                if (oy <= 0) continue;
                for (long long c = x0 / w; c < kCols && c * w < x1; ++c) {
                    const long long ox = std::min(x1, (c + 1) * w) - std::max(x0, c * w);
                    if (ox > 0) cell[r][c] += ox * oy * luma;
                }
            }
        }
    }
    std::uint64_t bits = 0;
    for (int r = 0; r < kRows; ++r)
        for (int c = 0; c + 1 < kCols; ++c) bits = (bits << 1) | (cell[r][c + 1] > cell[r][c] ? 1u : 0u);
    return bits;
}

std::uint64_t phash(std::string_view image_bytes) { return dhash(decode_image(image_bytes)); }

int hamming_distance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

DedupResult dedup(const std::vector<Instance>& instances, int threshold) {
    DedupResult out;
    std::vector<std::uint64_t> kept_hashes;
    for (const auto& inst : instances) {
        bool duplicate = false;
        for (const auto& img : inst.images) {
            for (std::uint64_t k : kept_hashes) {
                if (hamming_distance(img.phash, k) <= threshold) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) break;
        }
        if (duplicate) {
            out.removed_ids.push_back(inst.id);
            continue;
        }
        for (const auto& img : inst.images) kept_hashes.push_back(img.phash);
        out.kept.push_back(inst);
    }
    return out;
}

}  // namespace georl
