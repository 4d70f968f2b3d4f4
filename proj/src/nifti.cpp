#include "synthba/nifti.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

namespace synthba {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

enum Datatype : int {
    DT_UINT8 = 2,
    DT_INT16 = 4,
    DT_INT32 = 8,
    DT_FLOAT32 = 16,
    DT_FLOAT64 = 64,
    DT_INT8 = 256,
    DT_UINT16 = 512,
    DT_UINT32 = 768,
    DT_INT64 = 1024,
    DT_UINT64 = 1280,
};

int datatype_size(int dt) {
    switch (dt) {
    case DT_UINT8:
    case DT_INT8: return 1;
    case DT_INT16:
    case DT_UINT16: return 2;
    case DT_INT32:
    case DT_UINT32:
    case DT_FLOAT32: return 4;
    case DT_INT64:
    case DT_UINT64:
    case DT_FLOAT64: return 8;
    default: return 0;
    }
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    // gzread passes uncompressed files through unchanged
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf;
    unsigned char chunk[1 << 16];
    int n = 0;
    while ((n = gzread(f, chunk, sizeof(chunk))) > 0) buf.insert(buf.end(), chunk, chunk + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw FormatError("corrupt gzip stream in " + path.string());
    return buf;
}

class HeaderReader {
public:
    HeaderReader(const std::vector<unsigned char>& buf, bool swap) : buf_(buf), swap_(swap) {}

    template <typename T>
    T get(std::size_t offset) const {
        T v;
        std::memcpy(&v, buf_.data() + offset, sizeof(T));
        if (swap_) swap_bytes(v);
        return v;
    }

    template <typename T>
    static void swap_bytes(T& v) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }

private:
    const std::vector<unsigned char>& buf_;
    bool swap_;
};

Affine qform_affine(const HeaderReader& h, const Spacing& pix, float qfac_raw) {
    const double b = h.get<float>(256), c = h.get<float>(260), d = h.get<float>(264);
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const double qfac = qfac_raw < 0.0f ? -1.0 : 1.0;
    Eigen::Matrix3d r;
    r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
        2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
        2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
    Affine m = Affine::Identity();
    m.block<3, 1>(0, 0) = r.col(0) * pix[0];
    m.block<3, 1>(0, 1) = r.col(1) * pix[1];
    m.block<3, 1>(0, 2) = r.col(2) * pix[2] * qfac;
    m(0, 3) = h.get<float>(268);
    m(1, 3) = h.get<float>(272);
    m(2, 3) = h.get<float>(276);
    return m;
}

struct Decoded {
    GridMeta meta;
    std::vector<double> values;
};

Decoded decode(const std::vector<unsigned char>& buf, const std::string& name) {
    if (buf.size() < kHeaderSize) throw FormatError(name + ": file too short for a NIfTI-1 header");
    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, buf.data(), 4);
    bool swap = false;
    if (sizeof_hdr != kHeaderSize) {
        HeaderReader::swap_bytes(sizeof_hdr);
        if (sizeof_hdr != kHeaderSize) throw FormatError(name + ": sizeof_hdr is not 348");
        swap = true;
    }
    const HeaderReader h(buf, swap);
    const char* magic = reinterpret_cast<const char*>(buf.data() + 344);
    if (std::strncmp(magic, "n+1", 3) != 0 && std::strncmp(magic, "ni1", 3) != 0) {
        throw FormatError(name + ": missing NIfTI-1 magic");
    }
    if (std::strncmp(magic, "ni1", 3) == 0) throw UnsupportedError(name + ": two-file (.hdr/.img) NIfTI is not supported");

    const int ndim = h.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) throw FormatError(name + ": dim[0] out of range");
    Dims dims{1, 1, 1};
    for (int a = 0; a < std::min(ndim, 3); ++a) {
        dims[a] = h.get<std::int16_t>(42 + 2 * a);
        if (dims[a] < 1) throw FormatError(name + ": non-positive dimension");
    }
    for (int a = 3; a < ndim; ++a) {
        if (h.get<std::int16_t>(42 + 2 * a) > 1) throw UnsupportedError(name + ": only 3D volumes are supported");
    }

    const int datatype = h.get<std::int16_t>(70);
    const int bitpix = h.get<std::int16_t>(72);
    const int bytes = datatype_size(datatype);
    if (bytes == 0) throw UnsupportedError(name + ": unsupported datatype code " + std::to_string(datatype));
    if (bitpix != 8 * bytes) throw FormatError(name + ": bitpix does not match datatype");

    Spacing pix{};
    for (int a = 0; a < 3; ++a) {
        pix[a] = std::abs(static_cast<double>(h.get<float>(80 + 4 * a)));
        if (pix[a] == 0.0 || !std::isfinite(pix[a])) pix[a] = 1.0;
    }
    const float qfac = h.get<float>(76);

    Affine affine = Affine::Identity();
    const int qform_code = h.get<std::int16_t>(252);
    const int sform_code = h.get<std::int16_t>(254);
    if (sform_code > 0) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) affine(r, c) = h.get<float>(280 + 16 * r + 4 * c);
        }
    } else if (qform_code > 0) {
        affine = qform_affine(h, pix, qfac);
    } else {
        for (int a = 0; a < 3; ++a) affine(a, a) = pix[a];
    }

    const double vox_offset = h.get<float>(108);
    if (!(vox_offset >= kHeaderSize)) throw FormatError(name + ": vox_offset smaller than the header");
    const auto offset = static_cast<std::size_t>(vox_offset);

    double slope = h.get<float>(112);
    double inter = h.get<float>(116);
    if (slope == 0.0 || !std::isfinite(slope)) {
        slope = 1.0;
        inter = 0.0;
    }
    if (!std::isfinite(inter)) inter = 0.0;

    std::optional<GridMeta> meta;
    try {
        meta.emplace(dims, affine);
    } catch (const UsageError& e) {
        throw FormatError(name + ": invalid geometry: " + e.what());
    }
    const std::size_t count = meta->voxel_count();
    if (buf.size() < offset + count * bytes) throw FormatError(name + ": truncated voxel data");

    std::vector<double> values(count);
    const unsigned char* p = buf.data() + offset;
    auto convert = [&]<typename T>(T) {
        for (std::size_t n = 0; n < count; ++n) {
            T v;
            std::memcpy(&v, p + n * sizeof(T), sizeof(T));
            if (swap) HeaderReader::swap_bytes(v);
            values[n] = static_cast<double>(v) * slope + inter;
        }
    };
    switch (datatype) {
    case DT_UINT8: convert(std::uint8_t{}); break;
    case DT_INT8: convert(std::int8_t{}); break;
    case DT_INT16: convert(std::int16_t{}); break;
    case DT_UINT16: convert(std::uint16_t{}); break;
    case DT_INT32: convert(std::int32_t{}); break;
    case DT_UINT32: convert(std::uint32_t{}); break;
    case DT_INT64: convert(std::int64_t{}); break;
    case DT_UINT64: convert(std::uint64_t{}); break;
    case DT_FLOAT32: convert(float{}); break;
    case DT_FLOAT64: convert(double{}); break;
    }
    return {std::move(*meta), std::move(values)};
}

template <typename T>
std::vector<unsigned char> encode(const Volume<T>& v, int datatype) {
    std::vector<unsigned char> buf(kVoxOffset + v.size() * sizeof(T), 0);
    auto put = [&]<typename U>(std::size_t offset, U value) { std::memcpy(buf.data() + offset, &value, sizeof(U)); };
    const GridMeta& meta = v.meta();
    put(0, std::int32_t{kHeaderSize});
    put(40, std::int16_t{3});
    for (int a = 0; a < 3; ++a) put(42 + 2 * a, static_cast<std::int16_t>(meta.dims()[a]));
    for (int a = 3; a < 7; ++a) put(42 + 2 * a, std::int16_t{1});
    put(70, static_cast<std::int16_t>(datatype));
    put(72, static_cast<std::int16_t>(8 * sizeof(T)));
    const double det = meta.affine().block<3, 3>(0, 0).determinant();
    put(76, det < 0.0 ? -1.0f : 1.0f);
    for (int a = 0; a < 3; ++a) put(80 + 4 * a, static_cast<float>(meta.spacing()[a]));
    put(108, static_cast<float>(kVoxOffset));
    put(112, 1.0f);
    put(116, 0.0f);
    put(123, static_cast<char>(2)); // mm
    put(254, std::int16_t{1});
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) put(280 + 16 * r + 4 * c, static_cast<float>(meta.affine()(r, c)));
    }
    std::memcpy(buf.data() + 344, "n+1\0", 4);
    std::memcpy(buf.data() + kVoxOffset, v.data().data(), v.size() * sizeof(T));
    return buf;
}

bool has_gz_suffix(const std::filesystem::path& path) {
    const std::string s = path.filename().string();
    return s.size() > 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

void write_file(const std::vector<unsigned char>& buf, const std::filesystem::path& path) {
    if (has_gz_suffix(path)) {
        gzFile f = gzopen(path.c_str(), "wb6");
        if (!f) throw IoError("cannot open " + path.string() + " for writing");
        std::size_t written = 0;
        while (written < buf.size()) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - written, 1u << 30));
            if (gzwrite(f, buf.data() + written, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw IoError("write failed: " + path.string());
            }
            written += chunk;
        }
        if (gzclose(f) != Z_OK) throw IoError("write failed: " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace

AnyVolume load_volume(const std::filesystem::path& path, VolumeKind kind) {
    auto [meta, values] = decode(read_all(path), path.string());
    if (kind == VolumeKind::label) {
        std::vector<Label> labels(values.size());
        for (std::size_t n = 0; n < values.size(); ++n) {
            const double r = std::round(values[n]);
            if (!(std::abs(values[n] - r) <= 1e-6) || r < 0.0 || r > 65535.0) {
                throw DomainError(path.string() + ": value " + std::to_string(values[n]) + " is not a non-negative integer label");
            }
            labels[n] = static_cast<Label>(r);
        }
        return LabelVolume(std::move(meta), std::move(labels));
    }
    std::vector<float> data(values.begin(), values.end());
    try {
        return IntensityVolume(std::move(meta), std::move(data));
    } catch (const DomainError&) {
        throw DomainError(path.string() + ": contains NaN or Inf");
    }
}

LabelVolume load_label_volume(const std::filesystem::path& path) {
    return std::get<LabelVolume>(load_volume(path, VolumeKind::label));
}

IntensityVolume load_intensity_volume(const std::filesystem::path& path) {
    return std::get<IntensityVolume>(load_volume(path, VolumeKind::intensity));
}

void save_volume(const LabelVolume& v, const std::filesystem::path& path) {
    write_file(encode(v, DT_UINT16), path);
}

void save_volume(const IntensityVolume& v, const std::filesystem::path& path) {
    write_file(encode(v, DT_FLOAT32), path);
}

void write_nifti(std::ostream& os, const IntensityVolume& v) {
    const auto buf = encode(v, DT_FLOAT32);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_nifti(std::ostream& os, const LabelVolume& v) {
    const auto buf = encode(v, DT_UINT16);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

bool is_nifti_path(const std::filesystem::path& path) {
    const std::string s = path.filename().string();
    auto ends = [&](std::string_view suf) { return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0; };
    return ends(".nii") || ends(".nii.gz");
}

std::string nifti_stem(const std::filesystem::path& path) {
    std::string s = path.filename().string();
    for (std::string_view suf : {".nii.gz", ".nii"}) {
        if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
            return s.substr(0, s.size() - suf.size());
        }
    }
    return s;
}

} // namespace synthba
