#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "stylebench/error.hpp"
#include "stylebench/image.hpp"

namespace stylebench {

enum class ImageFormat { png, jpeg };

namespace detail {

inline bool has_png_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

inline bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// ---------------------------------------------------------------------------
// PNG

struct PngReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

inline void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->bytes.data() + src->offset, length);
  src->offset += length;
}

inline void png_error_to_longjmp(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  if (buffer) *buffer = message ? message : "libpng error";
  png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

inline RasterImage decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_to_longjmp, png_ignore_warning);
  if (!png) throw Error(ErrorCode::corrupt_data, origin + ": cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::corrupt_data, origin + ": cannot allocate PNG info");
  }

  PngReadSource source{bytes, 0};
  // Everything touched after setjmp that must survive a longjmp lives here.
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::corrupt_data, origin + ": " + message);
  }

  png_set_read_fn(png, &source, png_read_from_span);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_scale_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA ||
      (color_type == PNG_COLOR_TYPE_GRAY && png_get_valid(png, info, PNG_INFO_tRNS))) {
    // Two-channel gray+alpha has no RasterImage layout; promote to RGBA.
    png_set_gray_to_rgb(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (channels != 1 && channels != 3 && channels != 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::unsupported_format,
                origin + ": PNG decodes to " + std::to_string(channels) + " channels");
  }
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return RasterImage(static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels));
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

inline std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_to_longjmp, png_ignore_warning);
  if (!png) throw Error(ErrorCode::io_failure, "cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::io_failure, "cannot allocate PNG info");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_failure, "PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  const int color_type = img.channels() == 1   ? PNG_COLOR_TYPE_GRAY
                         : img.channels() == 3 ? PNG_COLOR_TYPE_RGB
                                               : PNG_COLOR_TYPE_RGBA;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  auto* base = const_cast<std::uint8_t*>(img.data().data());
  for (int y = 0; y < img.height(); ++y) rows[y] = base + y * stride;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// ---------------------------------------------------------------------------
// JPEG

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_to_longjmp(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_silence(j_common_ptr, int) {}

inline RasterImage decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_to_longjmp;
  err.base.emit_message = jpeg_silence;

  std::vector<std::uint8_t> pixels;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::corrupt_data, origin + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::unsupported_format, origin + ": CMYK JPEG is not supported");
  }
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  pixels.resize(stride * height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return RasterImage(width, height, channels, std::move(pixels));
}

struct JpegEncodeJob {
  const std::uint8_t* rows = nullptr;  // packed 1- or 3-channel samples
  int width = 0;
  int height = 0;
  int channels = 0;
  int quality = 92;
};

inline std::vector<std::uint8_t> jpeg_compress(const JpegEncodeJob& job) {
  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_to_longjmp;
  err.base.emit_message = jpeg_silence;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(ErrorCode::io_failure, std::string("JPEG encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(job.width);
  cinfo.image_height = static_cast<JDIMENSION>(job.height);
  cinfo.input_components = job.channels;
  cinfo.in_color_space = job.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, job.quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto row = const_cast<JSAMPROW>(job.rows + static_cast<std::size_t>(cinfo.next_scanline) *
                                                   static_cast<std::size_t>(job.width) * job.channels);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

/// Alpha is dropped; JPEG has no alpha channel.
inline std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 92) {
  std::vector<std::uint8_t> packed;
  if (img.channels() == 4) {
    packed.reserve(img.pixel_count() * 3);
    const auto src = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      packed.insert(packed.end(), src.begin() + i * 4, src.begin() + i * 4 + 3);
    }
  }
  JpegEncodeJob job;
  job.rows = img.channels() == 4 ? packed.data() : img.data().data();
  job.width = img.width();
  job.height = img.height();
  job.channels = img.channels() == 1 ? 1 : 3;
  job.quality = quality;
  return jpeg_compress(job);
}

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace detail

/// Decodes PNG or JPEG bytes, sniffing the format from the signature.
/// `origin` names the source in error messages.
inline RasterImage decode_image(std::span<const std::uint8_t> bytes,
                                const std::string& origin = "<memory>") {
  if (detail::has_png_signature(bytes)) return detail::decode_png(bytes, origin);
  if (detail::has_jpeg_signature(bytes)) return detail::decode_jpeg(bytes, origin);
  throw Error(ErrorCode::unsupported_format, origin + ": data is neither PNG nor JPEG");
}

inline std::vector<std::uint8_t> encode_image(const RasterImage& img, ImageFormat format) {
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot encode an empty image");
  return format == ImageFormat::png ? detail::encode_png(img) : detail::encode_jpeg(img);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::file_not_found, path.string() + ": no such file");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, path.string() + ": cannot open for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_failure, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::io_failure, path.string() + ": write failed");
}

/// Loads a PNG or JPEG file. 16-bit PNGs are scaled to 8 bits; grayscale
/// decodes to one channel.
inline RasterImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (detail::has_png_signature(bytes) || detail::has_jpeg_signature(bytes)) {
    return decode_image(bytes, path.string());
  }
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
    throw Error(ErrorCode::corrupt_data, path.string() + ": contents do not match the " + ext +
                                             " extension");
  }
  throw Error(ErrorCode::unsupported_format, path.string() + ": data is neither PNG nor JPEG");
}

inline void save_image(const RasterImage& img, const std::filesystem::path& path,
                       ImageFormat format = ImageFormat::png) {
  write_file_bytes(path, encode_image(img, format));
}

/// Format implied by a file name; anything other than .jpg/.jpeg is PNG.
inline ImageFormat format_for_path(const std::filesystem::path& path) {
  const std::string ext = detail::lower_extension(path);
  return (ext == ".jpg" || ext == ".jpeg") ? ImageFormat::jpeg : ImageFormat::png;
}

}  // namespace stylebench
