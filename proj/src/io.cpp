// SPDX-License-Identifier: Apache-2.0
#include "noisediff/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "noisediff/errors.hpp"

namespace noisediff::io {

namespace {

using Kind = FormatError::Kind;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

bool get_bytes(std::istream& in, unsigned char* dst, std::size_t n) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint64_t from_le(const unsigned char* b, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(Kind::io, "cannot open " + path.string() + " for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Next whitespace-delimited header token of a PNM file, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

void write_tensor_record(std::ostream& out, const Tensor& t) {
    out.write(tensor_magic, 4);
    put_u32(out, tensor_format_version);
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (auto d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Tensor read_tensor_record(std::istream& in) {
    unsigned char header[12];
    if (!get_bytes(in, header, 4)) throw FormatError(Kind::truncated_payload, "tensor file: truncated header");
    if (std::memcmp(header, tensor_magic, 4) != 0) throw FormatError(Kind::bad_magic, "tensor file: bad magic");
    if (!get_bytes(in, header + 4, 8)) throw FormatError(Kind::truncated_payload, "tensor file: truncated header");
    const auto version = static_cast<std::uint32_t>(from_le(header + 4, 4));
    if (version != tensor_format_version) {
        throw FormatError(Kind::unsupported_version,
                          "tensor file: unsupported version " + std::to_string(version));
    }
    const auto ndims = static_cast<std::uint32_t>(from_le(header + 8, 4));
    if (ndims == 0 || ndims > 16) throw FormatError(Kind::bad_header, "tensor file: invalid rank");

    Shape shape(ndims);
    std::uint64_t count = 1;
    for (auto& d : shape) {
        unsigned char b[8];
        if (!get_bytes(in, b, 8)) throw FormatError(Kind::truncated_payload, "tensor file: truncated dims");
        d = from_le(b, 8);
        if (d == 0 || count > (std::uint64_t{1} << 40) / d) {
            throw FormatError(Kind::bad_header, "tensor file: invalid dimension");
        }
        count *= d;
    }
    std::vector<unsigned char> payload(count * 8);
    if (!get_bytes(in, payload.data(), payload.size())) {
        throw FormatError(Kind::truncated_payload, "tensor file: truncated payload");
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(from_le(&payload[8 * i], 8));
    Tensor t(std::move(shape), std::move(data));
    if (!t.all_finite()) throw FormatError(Kind::non_finite, "tensor file: non-finite payload value");
    return t;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(Kind::io, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw FormatError(Kind::io, "write failed for " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw FormatError(Kind::io, "cannot move output into place at " + path.string());
    }
}

void write_tensor(const fs::path& path, const Tensor& t) {
    std::ostringstream out(std::ios::binary);
    write_tensor_record(out, t);
    write_file_atomic(path, out.str());
}

Tensor read_tensor(const fs::path& path) {
    std::istringstream in(read_file(path), std::ios::binary);
    Tensor t = read_tensor_record(in);
    if (in.peek() != EOF) throw FormatError(Kind::bad_header, "tensor file: trailing bytes after payload");
    return t;
}

std::vector<unsigned char> encode_image(const Tensor& t) {
    const auto& s = t.shape();
    const bool gray = s.size() == 2;
    const bool color = s.size() == 3 && s[2] == 3;
    if (!gray && !color) {
        throw ValidationError("write_image: expected shape [H, W] or [H, W, 3], got " + shape_str(s));
    }
    std::string header = std::string(gray ? "P5" : "P6") + "\n" + std::to_string(s[1]) + " " +
                         std::to_string(s[0]) + "\n255\n";
    std::vector<unsigned char> bytes(header.begin(), header.end());
    for (double v : t.data()) {
        const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        bytes.push_back(static_cast<unsigned char>(std::floor(c * 255.0 + 0.5)));
    }
    return bytes;
}

void write_image(const fs::path& path, const Tensor& t) {
    const auto bytes = encode_image(t);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Tensor read_image(const fs::path& path) {
    std::istringstream in(read_file(path), std::ios::binary);
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P6") throw FormatError(Kind::bad_magic, "image: only P5/P6 are supported");
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pnm_token(in));
        h = std::stoul(pnm_token(in));
        maxval = std::stoul(pnm_token(in));
    } catch (const std::exception&) {
        throw FormatError(Kind::bad_header, "image: malformed header in " + path.string());
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
        throw FormatError(Kind::bad_header, "image: unsupported dimensions or maxval");
    }
    const std::size_t channels = magic == "P5" ? 1 : 3;
    std::vector<unsigned char> pixels(w * h * channels);
    if (!get_bytes(in, pixels.data(), pixels.size())) {
        throw FormatError(Kind::truncated_payload, "image: truncated pixel data");
    }
    Shape shape = channels == 1 ? Shape{h, w} : Shape{h, w, 3};
    std::vector<double> data(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = pixels[i] / static_cast<double>(maxval);
    return Tensor(std::move(shape), std::move(data));
}

Tensor load_any(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".pgm" || ext == ".ppm") return read_image(path);
    return read_tensor(path);
}

GaussianMixture mixture_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    try {
        const double delta = j.value("delta", GaussianMixture::default_delta);
        const auto weights = j.at("weights").get<std::vector<double>>();
        std::vector<Tensor> centers;
        for (const auto& c : j.at("centers")) {
            if (c.is_string()) {
                centers.push_back(read_tensor(base_dir / c.get<std::string>()));
            } else {
                centers.emplace_back(c.at("shape").get<Shape>(), c.at("data").get<std::vector<double>>());
            }
        }
        return GaussianMixture(weights, std::move(centers), delta);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mixture file: ") + e.what());
    }
}

GaussianMixture load_mixture(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("mixture file " + path.string() + ": " + e.what());
    }
    return mixture_from_json(j, path.parent_path());
}

void save_mixture(const fs::path& path, const GaussianMixture& model) {
    nlohmann::json j;
    j["delta"] = model.delta();
    j["weights"] = model.weights();
    j["centers"] = nlohmann::json::array();
    for (std::size_t k = 0; k < model.components(); ++k) {
        const std::string name = "center_" + std::to_string(k) + ".ndtn";
        write_tensor(path.parent_path() / name, model.centers()[k]);
        j["centers"].push_back(name);
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

void save_checkpoint(const fs::path& path, const ScoreNetParams& params) {
    params.validate();
    std::ostringstream out(std::ios::binary);
    write_tensor_record(out, Tensor::vector({static_cast<double>(params.data_dim), static_cast<double>(params.hidden),
                                             static_cast<double>(ScoreNetParams::embed_width), params.data_std}));
    for (std::size_t k = 0; k < ScoreNetParams::layer_count; ++k) {
        const auto l = params.layer(k);
        const auto first = params.values.begin();
        std::vector<double> w(first + static_cast<std::ptrdiff_t>(l.weight_offset),
                              first + static_cast<std::ptrdiff_t>(l.weight_offset + l.in * l.out));
        std::vector<double> b(first + static_cast<std::ptrdiff_t>(l.bias_offset),
                              first + static_cast<std::ptrdiff_t>(l.bias_offset + l.out));
        write_tensor_record(out, Tensor({l.out, l.in}, std::move(w)));
        write_tensor_record(out, Tensor({l.out}, std::move(b)));
    }
    write_file_atomic(path, out.str());
}

ScoreNetParams load_checkpoint(const fs::path& path) {
    std::istringstream in(read_file(path), std::ios::binary);
    const Tensor meta = read_tensor_record(in);
    if (meta.shape() != Shape{4}) throw FormatError(Kind::bad_header, "checkpoint: malformed metadata record");
    if (meta[2] != static_cast<double>(ScoreNetParams::embed_width)) {
        throw FormatError(Kind::bad_header, "checkpoint: unsupported embedding width");
    }
    ScoreNetParams p;
    p.data_dim = static_cast<std::size_t>(meta[0]);
    p.hidden = static_cast<std::size_t>(meta[1]);
    p.data_std = meta[3];
    if (p.data_dim == 0 || p.hidden == 0) throw FormatError(Kind::bad_header, "checkpoint: zero dimension");
    p.values.assign(ScoreNetParams::parameter_count(p.data_dim, p.hidden), 0.0);
    for (std::size_t k = 0; k < ScoreNetParams::layer_count; ++k) {
        const auto l = p.layer(k);
        const Tensor w = read_tensor_record(in);
        const Tensor b = read_tensor_record(in);
        if (w.shape() != Shape{l.out, l.in} || b.shape() != Shape{l.out}) {
            throw FormatError(Kind::bad_header, "checkpoint: layer " + std::to_string(k) + " has wrong shape");
        }
        std::copy(w.data().begin(), w.data().end(), p.values.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
        std::copy(b.data().begin(), b.data().end(), p.values.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
    }
    if (in.peek() != EOF) throw FormatError(Kind::bad_header, "checkpoint: trailing bytes");
    p.validate();
    return p;
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

std::string report_csv_header() {
    return "experiment,seed,samples,mean,std,min,p01,p05,p25,median,p75,p95,p99,max,passed,checks";
}

std::string report_csv_row(const StatReport& r) {
    const auto& q = r.quantiles;
    std::ostringstream out;
    out << r.experiment << ',' << r.seed << ',' << r.samples;
    for (double v : {r.mean, r.stddev, q.min, q.p01, q.p05, q.p25, q.median, q.p75, q.p95, q.p99, q.max}) {
        out << ',' << fmt_double(v);
    }
    out << ',' << (r.passed() ? "true" : "false") << ',';
    // Checks as name=value;... so the row stays a single CSV field.
    for (std::size_t i = 0; i < r.checks.size(); ++i) {
        if (i) out << ';';
        out << r.checks[i].name << '=' << fmt_double(r.checks[i].value) << (r.checks[i].passed ? "" : "!");
    }
    return out.str();
}

nlohmann::json report_json(const StatReport& r) {
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["seed"] = r.seed;
    j["samples"] = r.samples;
    j["mean"] = r.mean;
    j["std"] = r.stddev;
    const auto& q = r.quantiles;
    j["quantiles"] = {{"min", q.min},       {"p01", q.p01}, {"p05", q.p05}, {"p25", q.p25}, {"median", q.median},
                      {"p75", q.p75},       {"p95", q.p95}, {"p99", q.p99}, {"max", q.max}};
    j["metrics"] = nlohmann::json::object();
    for (const auto& m : r.metrics) j["metrics"][m.name] = m.value;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks) {
        // JSON has no infinity; open upper bounds are written as null.
        nlohmann::json hi = std::isfinite(c.hi) ? nlohmann::json(c.hi) : nlohmann::json(nullptr);
        j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"lo", c.lo}, {"hi", hi}, {"passed", c.passed}});
    }
    j["passed"] = r.passed();
    return j;
}

}  // namespace noisediff::io
