#include "dip/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

namespace fs = std::filesystem;

namespace dip {

namespace {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() { if (f) std::fclose(f); }
};

Image load_png_file(const std::string& path, std::FILE* f) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed for " + path);
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    const int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    const std::size_t rowbytes = png_get_rowbytes(png, info);

    pixels.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image out(channels, static_cast<int>(h), static_cast<int>(w));
    for (png_uint_32 y = 0; y < h; ++y) {
        const png_byte* row = pixels.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                real v;
                if (bit_depth == 16) {
                    // PNG stores 16-bit samples big-endian.
                    std::size_t o = (static_cast<std::size_t>(x) * channels + c) * 2;
                    v = static_cast<real>((row[o] << 8) | row[o + 1]) / 65535.0;
                } else {
                    v = static_cast<real>(row[static_cast<std::size_t>(x) * channels + c]) / 255.0;
                }
                out.at(c, static_cast<int>(y), static_cast<int>(x)) = v;
            }
    }
    return out;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

Image load_jpeg_file(const std::string& path, std::FILE* f) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("corrupt JPEG: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);

    const int channels = cinfo.output_components >= 3 ? 3 : 1;
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    std::vector<JSAMPLE> row(static_cast<std::size_t>(w) * cinfo.output_components);
    Image out(channels, h, w);
    JSAMPROW rp = row.data();
    for (int y = 0; y < h; ++y) {
        jpeg_read_scanlines(&cinfo, &rp, 1);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                out.at(c, y, x) = static_cast<real>(row[static_cast<std::size_t>(x) * cinfo.output_components + c]) / 255.0;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

Image load_pnm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    in >> magic;
    const bool ascii = magic == "P2" || magic == "P3";
    const bool binary = magic == "P5" || magic == "P6";
    if (!ascii && !binary) throw IoError("unsupported PNM magic '" + magic + "' in " + path);
    const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;

    auto next_token = [&in, &path]() -> long {
        // Skips whitespace and '#' comments.
        while (true) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v;
        if (!(in >> v)) throw IoError("truncated PNM header in " + path);
        return v;
    };

    const int w = static_cast<int>(next_token());
    const int h = static_cast<int>(next_token());
    const long maxval = next_token();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError("bad PNM header in " + path);

    Image out(channels, h, w);
    if (ascii) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < channels; ++c) {
                    long v;
                    if (!(in >> v)) throw IoError("truncated PNM data in " + path);
                    out.at(c, y, x) = static_cast<real>(v) / static_cast<real>(maxval);
                }
        return out;
    }
    in.get(); // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * channels * bytes);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw IoError("truncated PNM data in " + path);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                std::size_t o = (static_cast<std::size_t>(x) * channels + c) * bytes;
                long v = bytes == 2 ? (buf[o] << 8) | buf[o + 1] : buf[o];
                out.at(c, y, x) = static_cast<real>(v) / static_cast<real>(maxval);
            }
    }
    return out;
}

} // namespace

Image load_image(const std::string& path) {
    FileCloser fc{std::fopen(path.c_str(), "rb")};
    if (!fc.f) throw IoError("cannot open " + path);
    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, fc.f) != 2) throw IoError("cannot read " + path);
    std::rewind(fc.f);
    if (magic[0] == 0x89 && magic[1] == 'P') return load_png_file(path, fc.f);
    if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg_file(path, fc.f);
    if (magic[0] == 'P' && magic[1] >= '2' && magic[1] <= '6') return load_pnm_file(path);
    throw IoError("unrecognized image format: " + path);
}

std::vector<Image> load_frames(const std::string& path, int max_frames, int stride,
                               int resize_long_side) {
    if (stride < 1) throw ConfigError("frame stride must be >= 1");
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".ppm" ||
                ext == ".pgm" || ext == ".pnm")
                files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw IoError("no such file or directory: " + path);
    }
    if (files.empty()) throw IoError("no frames found in " + path);

    std::vector<Image> frames;
    for (std::size_t i = 0; i < files.size(); i += stride) {
        if (max_frames > 0 && static_cast<int>(frames.size()) >= max_frames) break;
        Image img = load_image(files[i]);
        if (resize_long_side > 0) img = downscale_to_long_side(img, resize_long_side);
        frames.push_back(std::move(img));
    }
    for (const Image& f : frames)
        if (!f.same_shape(frames[0]))
            throw ShapeError("frames in " + path + " have mixed sizes; enable resizing");
    return frames;
}

namespace {

void save_png_impl(const std::string& path, const Image& img, int bit_depth) {
    if (img.channels() != 1 && img.channels() != 3)
        throw ShapeError("save_png: image must have 1 or 3 channels");
    FileCloser fc{std::fopen(path.c_str(), "wb")};
    if (!fc.f) throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG " + path);
    }
    png_init_io(png, fc.f);
    const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width(), img.height(), bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const int ch = img.channels();
    const long maxv = bit_depth == 16 ? 65535 : 255;
    std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * ch * (bit_depth / 8));
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < ch; ++c) {
                real v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                long q = std::lround(v * maxv);
                if (bit_depth == 16) {
                    row[(static_cast<std::size_t>(x) * ch + c) * 2] = static_cast<png_byte>(q >> 8);
                    row[(static_cast<std::size_t>(x) * ch + c) * 2 + 1] = static_cast<png_byte>(q & 0xff);
                } else {
                    row[static_cast<std::size_t>(x) * ch + c] = static_cast<png_byte>(q);
                }
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

void save_png(const std::string& path, const Image& img) { save_png_impl(path, img, 8); }
void save_png16(const std::string& path, const Image& img) { save_png_impl(path, img, 16); }

Image downscale_to_long_side(const Image& img, int long_side) {
    const int longest = std::max(img.height(), img.width());
    if (long_side <= 0 || longest <= long_side) return img;
    const real scale = static_cast<real>(long_side) / longest;
    int oh = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
    int ow = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
    return resize_area(img, oh, ow);
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string fnv1a_file_hex(const std::string& path) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a_file(path)));
    return std::string(buf);
}

} // namespace dip
