#include "lineportrait/raster.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <jerror.h>
#include <png.h>

namespace lineportrait {

FormatError::FormatError(const std::string& what, std::optional<std::size_t> offset)
    : std::runtime_error(offset ? what + " (at byte " + std::to_string(*offset) + ")" : what),
      offset_(offset)
{
}

RasterImage::RasterImage(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill)
{
}

std::size_t BitImage::count() const
{
    std::size_t n = 0;
    for (auto b : bits)
        n += b != 0;
    return n;
}

namespace {

// Composite 8-bit RGBA over white.
Rgb over_white(const std::uint8_t* rgba)
{
    const unsigned a = rgba[3];
    auto blend = [a](unsigned c) {
        return static_cast<std::uint8_t>((c * a + 255u * (255u - a) + 127u) / 255u);
    };
    return {blend(rgba[0]), blend(rgba[1]), blend(rgba[2])};
}

struct PngReadContext {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
    char message[256];
};

void png_read_mem(png_structp png, png_bytep out, png_size_t len)
{
    auto* ctx = static_cast<PngReadContext*>(png_get_io_ptr(png));
    if (len > ctx->size - ctx->offset) {
        ctx->offset = ctx->size;
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, ctx->data + ctx->offset, len);
    ctx->offset += len;
}

void png_on_error(png_structp png, png_const_charp msg)
{
    auto* ctx = static_cast<PngReadContext*>(png_get_error_ptr(png));
    std::snprintf(ctx->message, sizeof ctx->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

RasterImage decode_png(std::span<const std::uint8_t> bytes)
{
    PngReadContext ctx{bytes.data(), bytes.size(), 0, {}};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, png_on_error, png_on_warning);
    if (!png)
        throw FormatError("cannot allocate PNG decoder");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("cannot allocate PNG decoder");
    }

    // Only trivially destructible state may live between setjmp and longjmp.
    std::uint8_t* buffer = nullptr;
    png_bytep* rows = nullptr;
    png_uint_32 width = 0, height = 0;

    if (setjmp(png_jmpbuf(png))) {
        std::free(buffer);
        std::free(rows);
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(std::string("invalid PNG: ") + ctx.message, ctx.offset);
    }

    png_set_read_fn(png, &ctx, png_read_mem);
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (!(color_type & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_add_alpha(png, 0xff, PNG_FILLER_AFTER);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(width) * 4;
    buffer = static_cast<std::uint8_t*>(std::malloc(stride * height));
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * height));
    if (!buffer || !rows)
        png_error(png, "out of memory");
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = buffer + y * stride;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RasterImage img(static_cast<int>(width), static_cast<int>(height));
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = over_white(buffer + 4 * i);
    std::free(buffer);
    std::free(rows);
    return img;
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_on_error(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    cinfo->err->format_message(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// A truncated stream is only a warning in libjpeg; promote it to an error.
void jpeg_on_message(j_common_ptr cinfo, int level)
{
    if (level < 0 && cinfo->err->msg_code == JWRN_JPEG_EOF)
        jpeg_on_error(cinfo);
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes)
{
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_on_error;
    err.mgr.emit_message = jpeg_on_message;

    std::uint8_t* buffer = nullptr;
    if (setjmp(err.jump)) {
        std::size_t offset = bytes.size();
        if (cinfo.src)
            offset = bytes.size() - cinfo.src->bytes_in_buffer;
        std::free(buffer);
        jpeg_destroy_decompress(&cinfo);
        throw FormatError(std::string("invalid JPEG: ") + err.message, offset);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    if (cinfo.output_components != 3) {
        std::snprintf(err.message, sizeof err.message, "unsupported component count");
        std::longjmp(err.jump, 1);
    }

    const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
    buffer = static_cast<std::uint8_t*>(std::malloc(stride * cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buffer + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);

    RasterImage img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
    std::free(buffer);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

void png_write_mem(png_structp png, png_bytep data, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_mem(png_structp) {}

void png_write_error(png_structp png, png_const_charp)
{
    png_longjmp(png, 1);
}

std::vector<std::uint8_t> write_png(int width, int height, int bit_depth, int color_type,
                                    const std::vector<std::vector<std::uint8_t>>& rows)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_write_error, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("cannot allocate PNG encoder");
    }
    std::vector<png_bytep> row_ptrs(rows.size());
    for (std::size_t y = 0; y < rows.size(); ++y)
        row_ptrs[y] = const_cast<png_bytep>(rows[y].data());

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_mem, png_flush_mem);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 1);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

bool has_prefix(std::span<const std::uint8_t> bytes, std::initializer_list<std::uint8_t> magic)
{
    if (bytes.size() < magic.size())
        return false;
    return std::equal(magic.begin(), magic.end(), bytes.begin());
}

}  // namespace

RasterImage load_image(std::span<const std::uint8_t> bytes)
{
    if (has_prefix(bytes, {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'}))
        return decode_png(bytes);
    if (has_prefix(bytes, {0xff, 0xd8, 0xff}))
        return decode_jpeg(bytes);
    throw FormatError("payload is neither PNG nor JPEG", 0);
}

RasterImage load_image_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_image(bytes);
}

std::vector<std::uint8_t> encode_png(const RasterImage& img)
{
    std::vector<std::vector<std::uint8_t>> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        auto& row = rows[y];
        row.reserve(static_cast<std::size_t>(img.width) * 3);
        for (int x = 0; x < img.width; ++x) {
            const Rgb c = img.at(x, y);
            row.insert(row.end(), {c.r, c.g, c.b});
        }
    }
    return write_png(img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

std::vector<std::uint8_t> encode_png(const BitImage& img)
{
    std::vector<std::vector<std::uint8_t>> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        auto& row = rows[y];
        row.assign((static_cast<std::size_t>(img.width) + 7) / 8, 0);
        for (int x = 0; x < img.width; ++x)
            if (img.at(x, y))
                row[x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
    }
    return write_png(img.width, img.height, 1, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality)
{
    jpeg_compress_struct cinfo{};
    jpeg_error_mgr jerr{};
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);

    unsigned char* mem = nullptr;
    unsigned long mem_size = 0;
    jpeg_mem_dest(&cinfo, &mem, &mem_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
    while (cinfo.next_scanline < cinfo.image_height) {
        const int y = static_cast<int>(cinfo.next_scanline);
        for (int x = 0; x < img.width; ++x) {
            const Rgb c = img.at(x, y);
            row[3 * x] = c.r;
            row[3 * x + 1] = c.g;
            row[3 * x + 2] = c.b;
        }
        JSAMPROW ptr = row.data();
        jpeg_write_scanlines(&cinfo, &ptr, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(mem, mem + mem_size);
    std::free(mem);
    jpeg_destroy_compress(&cinfo);
    return out;
}

}  // namespace lineportrait
