#include "cli.hpp"

#include "fsqkit/analysis.hpp"
#include "fsqkit/bitrate.hpp"
#include "fsqkit/container.hpp"
#include "fsqkit/error.hpp"
#include "fsqkit/filterbank.hpp"
#include "fsqkit/huffman.hpp"
#include "fsqkit/io.hpp"
#include "fsqkit/metrics.hpp"
#include "fsqkit/quantizer.hpp"
#include "fsqkit/random.hpp"
#include "fsqkit/residual.hpp"
#include "fsqkit/toymodel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace fsqkit::cli {

namespace {

using Json = nlohmann::ordered_json;

// Bad command-line input or configuration (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    std::ostream &out;
    std::ostream &err;
};

void emit_text(Context &ctx, const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        ctx.out << text;
    } else {
        io::write_file(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
    }
}

void emit_report(Context &ctx, const std::string &path, const std::string &command, Json body) {
    Json report;
    report["schema_version"] = report_schema_version;
    report["command"] = command;
    for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = it.value();
    emit_text(ctx, path, report.dump(2) + "\n");
}

std::string read_text(const std::string &path) {
    const auto bytes = io::read_file(path);
    return {bytes.begin(), bytes.end()};
}

std::uint64_t parse_u64(const std::string &s, const std::string &what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw UsageError(what + ": expected a non-negative integer, got '" + s + "'");
    }
    try {
        return std::stoull(s);
    } catch (const std::exception &) {
        throw UsageError(what + ": integer out of range: '" + s + "'");
    }
}

// Comma-separated level list; a single entry is repeated `dims` times when
// dims > 0.
std::vector<int> parse_levels(const std::string &text, std::size_t dims) {
    std::vector<int> levels;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_u64(item, "--levels");
        if (v > 65536) throw UsageError("--levels: level count too large");
        levels.push_back(static_cast<int>(v));
    }
    if (levels.empty()) throw UsageError("--levels: empty list");
    if (levels.size() == 1 && dims > 1) levels.assign(dims, levels.front());
    if (dims > 0 && levels.size() != dims) {
        throw UsageError("--levels: " + std::to_string(levels.size()) + " entries for " + std::to_string(dims) +
                         " latent dimensions");
    }
    return levels;
}

// Codebook size written as an integer or as base^exponent.
std::uint64_t parse_codebook(const std::string &text) {
    const auto caret = text.find('^');
    if (caret == std::string::npos) return parse_u64(text, "--codebooks");
    const auto base = parse_u64(text.substr(0, caret), "--codebooks");
    const auto exp = parse_u64(text.substr(caret + 1), "--codebooks");
    if (base > 0x7FFFFFFF || exp > 64) throw UsageError("--codebooks: '" + text + "' is too large");
    return bitstream::codebook_size(static_cast<int>(base), static_cast<int>(exp));
}

double parse_ratio(const std::string &text) {
    if (text == "phi" || text == "golden") return analysis::golden_ratio;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception &) {
        throw UsageError("--ratio: expected a number or 'phi', got '" + text + "'");
    }
}

// Applies keys of a JSON config object. Keys must be known; a key whose
// command-line option was given explicitly is skipped.
class ConfigBinder {
public:
    void bind(const std::string &key, CLI::Option *option, std::function<void(const Json &)> setter) {
        entries_[key] = {option, std::move(setter)};
    }

    void apply(const std::string &path) {
        if (path.empty()) return;
        Json cfg;
        try {
            cfg = Json::parse(read_text(path));
        } catch (const Json::parse_error &e) {
            throw Error(ErrorKind::parse_error, "config '" + path + "': " + e.what());
        }
        if (!cfg.is_object()) throw UsageError("config '" + path + "' must be a JSON object");
        for (auto it = cfg.begin(); it != cfg.end(); ++it) {
            const auto found = entries_.find(it.key());
            if (found == entries_.end()) throw UsageError("config '" + path + "': unknown key '" + it.key() + "'");
            if (found->second.option && found->second.option->count() > 0) continue;
            try {
                found->second.setter(it.value());
            } catch (const Json::exception &e) {
                throw UsageError("config key '" + it.key() + "': " + e.what());
            }
        }
    }

private:
    struct Entry {
        CLI::Option *option = nullptr;
        std::function<void(const Json &)> setter;
    };
    std::map<std::string, Entry> entries_;
};

std::vector<double> read_mono(Context &ctx, const std::string &path, std::uint32_t rate) {
    const auto wav = io::wav_read(path);
    io::require_rate(wav, rate);
    if (wav.channels > 1) ctx.err << "fsqkit: warning: '" << path << "' has " << wav.channels << " channels; downmixing to mono\n";
    return io::downmix(wav);
}

std::vector<double> seeded_noise(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(n);
    for (auto &v : x) v = standard_normal(rng);
    return x;
}

Json rational_json(const Rational &r) { return r.to_string(); }

// ---- quantize / dequantize / residual ----

struct QuantizeArgs {
    std::string input, output, levels = "17", config;
};

int cmd_quantize(Context &ctx, const QuantizeArgs &a) {
    const auto lat = io::latent_parse(io::read_file(a.input));
    const fsq::QuantizerSpec spec(parse_levels(a.levels, lat.dims), lat.frame_rate);
    bitstream::TokenStream stream;
    stream.header.frame_rate = lat.frame_rate;
    stream.header.dims = spec.dims();
    stream.header.stage_levels = {spec.levels()};
    std::vector<double> z(lat.dims);
    std::vector<int> digits(lat.dims);
    for (std::uint64_t f = 0; f < lat.frames; ++f) {
        for (std::uint32_t c = 0; c < lat.dims; ++c) z[c] = lat.values[f * lat.dims + c];
        if (!lat.bounded) {
            stream.tokens.push_back(fsq::quantize_vector(z, spec).index);
            continue;
        }
        // Already through tanh: round on the level grid directly.
        for (std::uint32_t c = 0; c < lat.dims; ++c) {
            const double steps = spec.levels()[c] - 1;
            digits[c] = static_cast<int>(std::clamp(std::floor(steps * (z[c] + 1.0) / 2.0 + 0.5), 0.0, steps));
        }
        stream.tokens.push_back(fsq::pack_digits(digits, spec.levels()));
    }
    emit_text(ctx, a.output, io::format_token_listing(stream));
    return exit_ok;
}

int cmd_dequantize(const std::string &input, const std::string &output) {
    const auto stream = io::parse_token_listing(read_text(input));
    if (stream.header.stage_count() != 1) {
        throw Error(ErrorKind::decode_error, "dequantize expects a single-stage listing; use 'residual reconstruct'");
    }
    const fsq::QuantizerSpec spec(stream.header.stage_levels.front(), stream.header.frame_rate);
    if (spec.dims() != stream.header.dims) throw Error(ErrorKind::decode_error, "stage level list does not match dims");
    io::LatentFile lat;
    lat.frame_rate = stream.header.frame_rate;
    lat.dims = static_cast<std::uint32_t>(spec.dims());
    lat.frames = stream.frame_count();
    lat.bounded = true;
    for (auto t : stream.tokens) {
        for (double v : fsq::token_to_values(t, spec)) lat.values.push_back(static_cast<float>(v));
    }
    if (output.empty()) throw UsageError("dequantize needs -o <latents.fsql>");
    io::write_file(output, io::latent_serialize(lat));
    return exit_ok;
}

struct ResidualArgs {
    std::string action, input, output;
    int levels = 5;
    int stages = 2;
};

int cmd_residual(Context &ctx, const ResidualArgs &a) {
    if (a.action == "check") {
        const auto r = residual::superset_check(a.levels, a.stages);
        Json body;
        body["levels"] = r.levels;
        body["stages"] = r.stages;
        body["fine_levels"] = r.fine_levels;
        body["combinations"] = r.combinations;
        body["violations"] = r.violations;
        body["covers_fine_lattice"] = r.covers_fine_lattice;
        body["distinct_sums"] = r.distinct_sums.size();
        emit_report(ctx, a.output, "residual check", body);
        return r.violations == 0 ? exit_ok : exit_data;
    }
    if (a.input.empty()) throw UsageError("residual " + a.action + " needs an input file");
    if (a.action == "decompose") {
        const double open_unit = std::nextafter(1.0, 0.0);
        const auto lat = io::latent_parse(io::read_file(a.input));
        const residual::ResidualSpec spec(a.levels, a.stages);
        bitstream::TokenStream stream;
        stream.header.frame_rate = lat.frame_rate;
        stream.header.dims = static_cast<int>(lat.dims);
        stream.header.stage_levels.assign(static_cast<std::size_t>(a.stages), std::vector<int>(lat.dims, a.levels));
        std::vector<double> z(lat.dims);
        for (std::uint64_t f = 0; f < lat.frames; ++f) {
            for (std::uint32_t c = 0; c < lat.dims; ++c) {
                const double v = lat.values[f * lat.dims + c];
                z[c] = lat.bounded ? std::atanh(std::clamp(v, -open_unit, open_unit)) : v;
            }
            const auto frame = residual::residual_decompose(z, spec);
            stream.tokens.insert(stream.tokens.end(), frame.stage_tokens.begin(), frame.stage_tokens.end());
        }
        emit_text(ctx, a.output, io::format_token_listing(stream));
        return exit_ok;
    }
    // reconstruct
    const auto stream = io::parse_token_listing(read_text(a.input));
    const auto &h = stream.header;
    const int levels = h.stage_levels.front().front();
    for (const auto &st : h.stage_levels) {
        if (st.size() != static_cast<std::size_t>(h.dims) ||
            std::any_of(st.begin(), st.end(), [&](int l) { return l != levels; })) {
            throw Error(ErrorKind::decode_error, "residual reconstruction needs the same level count on every stage and dimension");
        }
    }
    const residual::ResidualSpec spec(levels, static_cast<int>(h.stage_count()));
    io::LatentFile lat;
    lat.frame_rate = h.frame_rate;
    lat.dims = static_cast<std::uint32_t>(h.dims);
    lat.frames = stream.frame_count();
    lat.bounded = true;
    const auto stages = h.stage_count();
    for (std::uint64_t f = 0; f < lat.frames; ++f) {
        const auto v = residual::residual_reconstruct(std::span(stream.tokens).subspan(f * stages, stages), spec, h.dims);
        for (double x : v) lat.values.push_back(static_cast<float>(x));
    }
    if (a.output.empty()) throw UsageError("residual reconstruct needs -o <latents.fsql>");
    io::write_file(a.output, io::latent_serialize(lat));
    return exit_ok;
}

// ---- container ----

int cmd_pack(const std::string &input, const std::string &output, const std::string &mode) {
    const auto stream = io::parse_token_listing(read_text(input));
    if (output.empty()) throw UsageError("pack needs -o <out.fsqb>");
    io::write_file(output, bitstream::pack_stream(stream, mode == "huffman" ? bitstream::PackMode::huffman
                                                                            : bitstream::PackMode::raw));
    return exit_ok;
}

int cmd_unpack(Context &ctx, const std::string &input, const std::string &output) {
    emit_text(ctx, output, io::format_token_listing(bitstream::unpack_stream(io::read_file(input))));
    return exit_ok;
}

Json histogram_json(const bitstream::CodebookHistogram &h, const Rational &frame_rate, std::uint64_t codebook) {
    Json j;
    j["codebook_size"] = h.codebook_size();
    j["tokens"] = h.total();
    j["distinct_tokens"] = h.counts().size();
    j["entropy_bits"] = bitstream::entropy_bits(h);
    j["normalized_entropy"] = bitstream::normalized_entropy(h);
    j["raw_bits_per_token"] = bitstream::bits_per_token(codebook);
    if (h.total() > 0) {
        const auto table = bitstream::huffman_build(h);
        j["huffman_bits_per_token"] = bitstream::average_code_length(h, table);
        j["huffman_bps"] = bitstream::huffman_bitrate(h, table, frame_rate);
    }
    return j;
}

int cmd_stats(Context &ctx, const std::string &input, const std::string &output) {
    const auto bytes = io::read_file(input);
    const auto stream = bitstream::unpack_stream(bytes);
    const auto layout = bitstream::packed_layout(bytes);
    const auto &h = stream.header;
    Json body;
    body["frames"] = stream.frame_count();
    body["frame_rate"] = rational_json(h.frame_rate);
    body["dims"] = h.dims;
    std::vector<std::uint64_t> books;
    for (std::size_t s = 0; s < h.stage_count(); ++s) books.push_back(h.stage_codebook(s));
    body["raw_bps"] = rational_json(bitstream::bps(h.frame_rate, books));
    body["file_bytes"] = bytes.size();
    body["header_bytes"] = layout.header_bytes;
    body["payload_bytes"] = layout.payload_bytes;
    Json stages = Json::array();
    const auto hists = bitstream::stage_histograms(stream);
    for (std::size_t s = 0; s < hists.size(); ++s) stages.push_back(histogram_json(hists[s], h.frame_rate, books[s]));
    body["stages"] = stages;
    const auto pooled = bitstream::pooled_histogram(stream);
    body["pooled"] = histogram_json(pooled, h.frame_rate * Rational(static_cast<std::int64_t>(h.stage_count())),
                                    pooled.codebook_size());
    emit_report(ctx, output, "stats", body);
    return exit_ok;
}

int cmd_bps(Context &ctx, const std::string &rate, const std::vector<std::string> &codebooks, bool json) {
    Rational r;
    try {
        r = Rational::parse(rate);
    } catch (const Error &e) {
        throw UsageError(std::string("--rate: ") + e.what());
    }
    std::vector<std::uint64_t> books;
    for (const auto &c : codebooks) {
        std::stringstream ss(c);
        std::string item;
        while (std::getline(ss, item, ',')) books.push_back(parse_codebook(item));
    }
    if (books.empty()) throw UsageError("bps needs at least one codebook size");
    const auto value = bitstream::bps(r, books);
    if (json) {
        Json body;
        body["frame_rate"] = rational_json(r);
        body["codebooks"] = books;
        body["bps"] = rational_json(value);
        emit_report(ctx, "", "bps", body);
    } else {
        ctx.out << value.to_string() << "\n";
    }
    return exit_ok;
}

// ---- analysis ----

struct RfArgs {
    std::string layers_file, preset, latency = "causal", output;
    std::size_t window = 128;
    double latent_rate = 25.0;
    double chunk = 0.0;
};

analysis::LayerSpec layer_from_json(const Json &j) {
    static const std::vector<std::string> allowed{"kind", "extent", "stride", "dilation", "causal", "rate"};
    if (!j.is_object()) throw UsageError("each layer must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw UsageError("layer spec: unknown key '" + it.key() + "'");
        }
    }
    analysis::LayerSpec l;
    try {
        l.kind = analysis::parse_layer_kind(j.at("kind").get<std::string>());
    } catch (const Error &e) {
        throw UsageError(e.what());
    }
    l.extent = j.value("extent", std::size_t{1});
    l.stride = j.value("stride", std::size_t{1});
    l.dilation = j.value("dilation", std::size_t{1});
    l.causal = j.value("causal", false);
    l.rate = j.at("rate").get<double>();
    return l;
}

int cmd_rf(Context &ctx, const RfArgs &a) {
    std::vector<analysis::LayerSpec> layers;
    double latent_rate = a.latent_rate;
    if (!a.preset.empty()) {
        layers = analysis::taae_layers(a.window, a.preset == "taae-causal");
    } else {
        if (a.layers_file.empty()) throw UsageError("rf needs a layer-spec file or --preset");
        Json j;
        try {
            j = Json::parse(read_text(a.layers_file));
        } catch (const Json::parse_error &e) {
            throw Error(ErrorKind::parse_error, "layer spec '" + a.layers_file + "': " + e.what());
        }
        try {
            const Json *list = &j;
            if (j.is_object()) {
                for (auto it = j.begin(); it != j.end(); ++it) {
                    if (it.key() != "layers" && it.key() != "latent_rate") {
                        throw UsageError("layer spec: unknown key '" + it.key() + "'");
                    }
                }
                list = &j.at("layers");
                latent_rate = j.value("latent_rate", latent_rate);
            }
            if (!list->is_array()) throw UsageError("layer spec must be a list of layers");
            for (const auto &l : *list) layers.push_back(layer_from_json(l));
        } catch (const Json::exception &e) {
            throw UsageError(std::string("layer spec: ") + e.what());
        }
    }
    const auto rf = analysis::receptive_field(layers);
    const auto mode = a.latency == "chunked" ? analysis::LatencyMode::chunks(a.chunk) : analysis::LatencyMode::causal();
    Json body;
    body["layers"] = layers.size();
    body["per_layer_seconds"] = rf.per_layer_seconds;
    body["max_per_layer_seconds"] = rf.max_per_layer;
    body["total_seconds"] = rf.total;
    body["latency_mode"] = a.latency;
    body["latency_seconds"] = analysis::latency(latent_rate, mode);
    emit_report(ctx, a.output, "rf", body);
    return exit_ok;
}

struct FftPlanArgs {
    std::size_t base = 39, count = 8, search = 0, probe_length = 8192;
    std::string ratio = "phi", preset, output;
    bool probe = false;
    std::uint64_t seed = 1;
};

Json plan_json(const analysis::FftPlan &p) {
    Json j;
    j["sizes"] = p.sizes;
    j["hops"] = p.hops;
    j["inharmonicity"] = p.sizes.size() >= 2 ? Json(analysis::inharmonicity_score(p)) : Json(nullptr);
    return j;
}

int cmd_fftplan(Context &ctx, const FftPlanArgs &a) {
    const double ratio = parse_ratio(a.ratio);
    const auto plan = a.preset == "reference" ? analysis::reference_fft_plan() : analysis::fft_plan(a.base, ratio, a.count);
    Json body;
    body["base_hop"] = a.base;
    body["ratio"] = ratio;
    body["count"] = a.count;
    body["plan"] = plan_json(plan);
    const auto pow2 = analysis::fft_plan(a.base, 2.0, plan.sizes.size());
    body["power_of_two_plan"] = plan_json(pow2);
    if (a.search > 0) {
        const auto cands = analysis::ratio_search(a.base, a.count, a.search);
        Json best = Json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(10, cands.size()); ++i) {
            best.push_back({{"ratio", cands[i].ratio}, {"score", cands[i].score}});
        }
        body["search"] = {{"grid_points", a.search},
                          {"best", best},
                          {"requested_ratio_rank_fraction", analysis::ratio_rank_fraction(cands, a.base, a.count, ratio)}};
    }
    if (a.probe) {
        const auto x = seeded_noise(a.seed, a.probe_length);
        const auto ref = seeded_noise(a.seed + 1, a.probe_length);
        const auto probe = filterbank::FilterbankSpec::stft(64, 16, filterbank::Window::hann);
        const std::size_t skip = std::max(plan.sizes.back(), pow2.sizes.back()) / probe.hop + 2;
        const auto m_plan = analysis::sensitivity_map(x, ref, probe, plan);
        const auto m_pow2 = analysis::sensitivity_map(x, ref, probe, pow2);
        body["sensitivity"] = {{"probe_fft", probe.size},
                               {"probe_hop", probe.hop},
                               {"plan_time_peak_to_mean", analysis::peak_to_mean(m_plan.time_marginal(), skip)},
                               {"power_of_two_time_peak_to_mean", analysis::peak_to_mean(m_pow2.time_marginal(), skip)}};
    }
    emit_report(ctx, a.output, "fftplan", body);
    return exit_ok;
}

struct FbankArgs {
    std::string family = "stft", window = "hann", input, output;
    std::size_t size = 2048, hop = 512, taps = 0, length = 16000;
    std::uint64_t seed = 1;
};

int cmd_fbank(Context &ctx, const FbankArgs &a) {
    using filterbank::FilterbankSpec;
    using filterbank::Window;
    const Window w = a.window == "rect" ? Window::rectangular : a.window == "sine" ? Window::sine : Window::hann;
    FilterbankSpec spec;
    if (a.family == "patch") {
        spec = FilterbankSpec::patch(a.size);
    } else if (a.family == "stft") {
        spec = FilterbankSpec::stft(a.size, a.hop, w);
    } else if (a.family == "mdct") {
        spec = FilterbankSpec::mdct(a.size);
    } else {
        spec = FilterbankSpec::pqmf(a.size, a.taps);
    }
    try {
        spec.validate();
        if (spec.family == filterbank::Family::stft) (void)filterbank::cola_constant(spec);
    } catch (const Error &e) {
        throw UsageError(e.what());
    }
    std::vector<double> x;
    if (!a.input.empty()) {
        const auto wav = io::wav_read(a.input);
        if (wav.channels > 1) ctx.err << "fsqkit: warning: downmixing " << wav.channels << " channels to mono\n";
        x = io::downmix(wav);
    } else {
        x = seeded_noise(a.seed, a.length);
    }
    const auto r = filterbank::roundtrip_report(x, spec);
    Json body;
    body["family"] = a.family;
    body["size"] = spec.size;
    body["hop"] = spec.hop;
    body["samples"] = x.size();
    body["relative_l2"] = r.relative_l2;
    body["relative_db"] = std::isfinite(r.relative_db) ? Json(r.relative_db) : Json("-inf");
    body["max_abs_error"] = r.max_abs;
    body["sampling_ratio"] = r.sampling_ratio;
    emit_report(ctx, a.output, "fbank", body);
    return exit_ok;
}

// ---- toy model ----

struct ToyArgs {
    std::string action, config, input, output;
    std::size_t length = 0;
    toymodel::ModelSpec spec;
};

void bind_model_config(ConfigBinder &b, toymodel::ModelSpec &s) {
    b.bind("patch_size", nullptr, [&](const Json &v) { s.patch_size = v.get<std::size_t>(); });
    b.bind("blocks", nullptr, [&](const Json &v) {
        s.blocks.clear();
        for (const auto &blk : v) {
            if (blk.is_array()) {
                s.blocks.push_back({blk.at(0).get<std::size_t>(), blk.at(1).get<std::size_t>()});
            } else {
                for (auto it = blk.begin(); it != blk.end(); ++it) {
                    if (it.key() != "layers" && it.key() != "stride") throw UsageError("block: unknown key '" + it.key() + "'");
                }
                s.blocks.push_back({blk.value("layers", std::size_t{0}), blk.value("stride", std::size_t{1})});
            }
        }
    });
    b.bind("dim", nullptr, [&](const Json &v) { s.dim = v.get<std::size_t>(); });
    b.bind("head_dim", nullptr, [&](const Json &v) { s.head_dim = v.get<std::size_t>(); });
    b.bind("window", nullptr, [&](const Json &v) { s.window = v.get<std::size_t>(); });
    b.bind("causal", nullptr, [&](const Json &v) { s.causal = v.get<bool>(); });
    b.bind("eps", nullptr, [&](const Json &v) { s.eps = v.get<double>(); });
    b.bind("ff_expansion", nullptr, [&](const Json &v) { s.ff_expansion = v.get<std::size_t>(); });
    b.bind("levels", nullptr, [&](const Json &v) { s.levels = v.get<std::vector<int>>(); });
    b.bind("seed", nullptr, [&](const Json &v) { s.seed = v.get<std::uint64_t>(); });
    b.bind("sample_rate", nullptr, [&](const Json &v) { s.sample_rate = v.get<std::uint32_t>(); });
}

std::string parameter_digest(const std::vector<double> &params) {
    std::uint64_t h = 1469598103934665603ull;
    for (double p : params) {
        const auto bits = std::bit_cast<std::uint64_t>(p);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int cmd_toymodel(Context &ctx, ToyArgs &a) {
    ConfigBinder binder;
    bind_model_config(binder, a.spec);
    binder.apply(a.config);
    try {
        a.spec.validate();
    } catch (const Error &e) {
        throw UsageError(e.what());
    }
    const auto model = toymodel::build(a.spec);
    const auto &s = model.spec();
    if (a.action == "build") {
        const auto params = model.parameters();
        Json body;
        body["parameters"] = params.size();
        body["parameter_digest"] = parameter_digest(params);
        body["hop_samples"] = s.hop();
        body["frame_rate"] = rational_json(s.frame_rate());
        body["codebook_size"] = model.quantizer().codebook_size();
        body["analytic_receptive_field_seconds"] = toymodel::analytic_receptive_field(s);
        body["layernorm_gain_cap_db"] = analysis::layernorm_gain_cap(s.eps);
        body["linear_gain_bound_db"] = model.linear_gain_bound_db();
        emit_report(ctx, a.output, "toymodel build", body);
        return exit_ok;
    }
    if (a.action == "encode") {
        if (a.input.empty()) throw UsageError("toymodel encode needs --input <audio.wav>");
        const auto x = read_mono(ctx, a.input, s.sample_rate);
        emit_text(ctx, a.output, io::format_token_listing(model.encode(x).tokens));
        return exit_ok;
    }
    if (a.action == "decode") {
        if (a.input.empty()) throw UsageError("toymodel decode needs --input <tokens.txt>");
        if (a.output.empty()) throw UsageError("toymodel decode needs -o <audio.wav>");
        io::WavAudio wav;
        wav.sample_rate = s.sample_rate;
        wav.samples = model.decode(io::parse_token_listing(read_text(a.input)));
        const auto stats = io::wav_write(a.output, wav);
        if (stats.clipped > 0) ctx.err << "fsqkit: warning: " << stats.clipped << " samples clipped to 16-bit range\n";
        return exit_ok;
    }
    if (a.action == "causality") {
        const auto r = toymodel::check_causality(model, a.length);
        Json body;
        body["causal_spec"] = s.causal;
        body["probe_sample"] = r.probe;
        body["frame_start"] = r.frame_start;
        body["latency_samples"] = r.latency_samples;
        body["latency_seconds"] = r.latency_seconds;
        body["max_leakage"] = r.max_leakage;
        body["leakage_before_probe"] = r.leakage_before_probe;
        body["causal"] = r.causal;
        emit_report(ctx, a.output, "toymodel causality", body);
        return exit_ok;
    }
    // rf
    const double analytic = toymodel::analytic_receptive_field(s);
    std::size_t length = a.length;
    if (length == 0) {
        const auto frames = static_cast<std::size_t>(std::floor(2.0 * analytic * s.sample_rate / static_cast<double>(s.hop()))) + 2;
        length = frames * s.hop();
    }
    const auto m = toymodel::measure_receptive_field(model, length);
    Json body;
    body["length"] = length;
    body["probe_sample"] = m.probe;
    body["first_sample"] = m.first;
    body["last_sample"] = m.last;
    body["empirical_seconds"] = m.seconds;
    body["analytic_seconds"] = analytic;
    emit_report(ctx, a.output, "toymodel rf", body);
    return exit_ok;
}

int cmd_metrics(Context &ctx, const std::string &ref_path, const std::string &est_path, const std::string &output) {
    const auto ref = read_mono(ctx, ref_path, 16000);
    const auto est = read_mono(ctx, est_path, 16000);
    const auto r = metrics::evaluate(ref, est, 16000.0);
    Json body;
    body["samples"] = ref.size();
    body["si_sdr_db"] = r.si_sdr_db;
    body["mel_distance"] = r.mel_distance;
    body["stft_distance"] = r.stft_distance;
    emit_report(ctx, output, "metrics", body);
    return exit_ok;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_config:
    case ErrorKind::invalid_level_count:
    case ErrorKind::invalid_codebook:
    case ErrorKind::invalid_input:
    case ErrorKind::invalid_noise:
    case ErrorKind::residual_unsupported:
    case ErrorKind::non_invertible_config:
        return exit_usage;
    default:
        return exit_data;
    }
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    Context ctx{out, err};
    CLI::App app{"Finite scalar quantization toolkit for neural audio codec experiments", "fsqkit"};
    app.require_subcommand(1);

    QuantizeArgs qa;
    auto *quantize = app.add_subcommand("quantize", "Quantize a latent file into a token listing");
    quantize->add_option("input", qa.input, "Latent file (FSQL)")->required();
    quantize->add_option("-o,--output", qa.output, "Token listing (default stdout)");
    auto *q_levels = quantize->add_option("--levels", qa.levels, "Levels per dimension (comma list or one value)");
    quantize->add_option("--config", qa.config, "JSON config with a 'levels' key");

    std::string dq_in, dq_out;
    auto *dequantize = app.add_subcommand("dequantize", "Convert a single-stage token listing back to latents");
    dequantize->add_option("input", dq_in, "Token listing")->required();
    dequantize->add_option("-o,--output", dq_out, "Latent file (FSQL)")->required();

    ResidualArgs ra;
    auto *res = app.add_subcommand("residual", "Residual FSQ decomposition, reconstruction and lattice check");
    res->add_option("action", ra.action, "decompose | reconstruct | check")
        ->required()
        ->check(CLI::IsMember({"decompose", "reconstruct", "check"}));
    res->add_option("input", ra.input, "Latent file (decompose) or token listing (reconstruct)");
    res->add_option("-o,--output", ra.output, "Output path (default stdout for text)");
    res->add_option("--levels", ra.levels, "Levels per stage (2^n + 1)");
    res->add_option("--stages", ra.stages, "Number of stages");

    std::string pk_in, pk_out, pk_mode = "raw";
    auto *pack = app.add_subcommand("pack", "Pack a token listing into an FSQB container");
    pack->add_option("input", pk_in, "Token listing")->required();
    pack->add_option("-o,--output", pk_out, "Container path")->required();
    pack->add_option("--mode", pk_mode, "raw | huffman")->check(CLI::IsMember({"raw", "huffman"}));

    std::string up_in, up_out;
    auto *unpack = app.add_subcommand("unpack", "Unpack an FSQB container into a token listing");
    unpack->add_option("input", up_in, "Container path")->required();
    unpack->add_option("-o,--output", up_out, "Token listing (default stdout)");

    std::string st_in, st_out;
    auto *stats = app.add_subcommand("stats", "Codebook utilization and entropy-coded bitrate of a container");
    stats->add_option("input", st_in, "Container path")->required();
    stats->add_option("-o,--output", st_out, "Report path (default stdout)");

    std::string bps_rate = "25";
    std::vector<std::string> bps_books;
    bool bps_json = false;
    auto *bps = app.add_subcommand("bps", "Bits per second of a token layout");
    bps->add_option("--rate", bps_rate, "Frame rate (integer, decimal or n/d)");
    bps->add_option("--codebooks", bps_books, "Codebook sizes (N or L^d, comma separated or repeated)")->required();
    bps->add_flag("--json", bps_json, "Print a JSON report");

    RfArgs rfa;
    auto *rf = app.add_subcommand("rf", "Receptive field and latency of a layer list");
    rf->add_option("layers", rfa.layers_file, "JSON layer-spec file");
    rf->add_option("--preset", rfa.preset, "taae | taae-causal")->check(CLI::IsMember({"taae", "taae-causal"}));
    rf->add_option("--window", rfa.window, "Attention window for presets");
    rf->add_option("--latent-rate", rfa.latent_rate, "Latent frame rate in Hz");
    rf->add_option("--latency", rfa.latency, "causal | chunked")->check(CLI::IsMember({"causal", "chunked"}));
    rf->add_option("--chunk", rfa.chunk, "Chunk length in seconds for chunked latency");
    rf->add_option("-o,--output", rfa.output, "Report path (default stdout)");

    FftPlanArgs fpa;
    auto *fftplan = app.add_subcommand("fftplan", "Multi-resolution FFT plan and inharmonicity score");
    fftplan->add_option("--base", fpa.base, "Base hop in samples");
    fftplan->add_option("--ratio", fpa.ratio, "Hop ratio (number or 'phi')");
    fftplan->add_option("--count", fpa.count, "Number of resolutions");
    fftplan->add_option("--preset", fpa.preset, "reference")->check(CLI::IsMember({"reference"}));
    fftplan->add_option("--search", fpa.search, "Also grid-search ratios in (1, 2] with this many points");
    fftplan->add_flag("--probe", fpa.probe, "Compare loss sensitivity maps against the power-of-two plan");
    fftplan->add_option("--probe-length", fpa.probe_length, "Noise length for the sensitivity probe");
    fftplan->add_option("--seed", fpa.seed, "Seed for the probe signals");
    fftplan->add_option("-o,--output", fpa.output, "Report path (default stdout)");

    FbankArgs fba;
    std::string fb_config;
    auto *fbank = app.add_subcommand("fbank", "Filterbank round-trip report");
    auto *fb_family = fbank->add_option("--family", fba.family, "patch | stft | mdct | pqmf")
                          ->check(CLI::IsMember({"patch", "stft", "mdct", "pqmf"}));
    auto *fb_size = fbank->add_option("--size", fba.size, "Patch size, FFT size, MDCT block or PQMF channels");
    auto *fb_hop = fbank->add_option("--hop", fba.hop, "STFT hop");
    auto *fb_window = fbank->add_option("--window", fba.window, "hann | rect | sine")
                          ->check(CLI::IsMember({"hann", "rect", "sine"}));
    auto *fb_taps = fbank->add_option("--taps", fba.taps, "PQMF prototype length (0 = 64 x channels)");
    fbank->add_option("--input", fba.input, "WAV input (default: seeded noise)");
    auto *fb_length = fbank->add_option("--length", fba.length, "Noise length in samples");
    auto *fb_seed = fbank->add_option("--seed", fba.seed, "Noise seed");
    fbank->add_option("--config", fb_config, "JSON config");
    fbank->add_option("-o,--output", fba.output, "Report path (default stdout)");

    ToyArgs ta;
    auto *toy = app.add_subcommand("toymodel", "Build and probe the miniature autoencoder");
    toy->add_option("action", ta.action, "build | encode | decode | causality | rf")
        ->required()
        ->check(CLI::IsMember({"build", "encode", "decode", "causality", "rf"}));
    toy->add_option("--config", ta.config, "JSON model spec");
    toy->add_option("--input", ta.input, "WAV (encode) or token listing (decode)");
    toy->add_option("--length", ta.length, "Probe length in samples (causality, rf)");
    toy->add_option("-o,--output", ta.output, "Output path (default stdout for text)");

    std::string m_ref, m_est, m_out;
    auto *met = app.add_subcommand("metrics", "SI-SDR, mel and STFT distances between two WAV files");
    met->add_option("reference", m_ref, "Reference WAV")->required();
    met->add_option("estimate", m_est, "Estimate WAV")->required();
    met->add_option("-o,--output", m_out, "Report path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (quantize->parsed()) {
            ConfigBinder b;
            b.bind("levels", q_levels, [&](const Json &v) {
                if (v.is_array()) {
                    std::string joined;
                    for (const auto &l : v) joined += (joined.empty() ? "" : ",") + std::to_string(l.get<int>());
                    qa.levels = joined;
                } else {
                    qa.levels = std::to_string(v.get<int>());
                }
            });
            b.apply(qa.config);
            return cmd_quantize(ctx, qa);
        }
        if (dequantize->parsed()) return cmd_dequantize(dq_in, dq_out);
        if (res->parsed()) return cmd_residual(ctx, ra);
        if (pack->parsed()) return cmd_pack(pk_in, pk_out, pk_mode);
        if (unpack->parsed()) return cmd_unpack(ctx, up_in, up_out);
        if (stats->parsed()) return cmd_stats(ctx, st_in, st_out);
        if (bps->parsed()) return cmd_bps(ctx, bps_rate, bps_books, bps_json);
        if (rf->parsed()) return cmd_rf(ctx, rfa);
        if (fftplan->parsed()) return cmd_fftplan(ctx, fpa);
        if (fbank->parsed()) {
            ConfigBinder b;
            b.bind("family", fb_family, [&](const Json &v) { fba.family = v.get<std::string>(); });
            b.bind("size", fb_size, [&](const Json &v) { fba.size = v.get<std::size_t>(); });
            b.bind("hop", fb_hop, [&](const Json &v) { fba.hop = v.get<std::size_t>(); });
            b.bind("window", fb_window, [&](const Json &v) { fba.window = v.get<std::string>(); });
            b.bind("taps", fb_taps, [&](const Json &v) { fba.taps = v.get<std::size_t>(); });
            b.bind("length", fb_length, [&](const Json &v) { fba.length = v.get<std::size_t>(); });
            b.bind("seed", fb_seed, [&](const Json &v) { fba.seed = v.get<std::uint64_t>(); });
            b.apply(fb_config);
            static const std::vector<std::string> families{"patch", "stft", "mdct", "pqmf"};
            static const std::vector<std::string> windows{"hann", "rect", "sine"};
            if (std::find(families.begin(), families.end(), fba.family) == families.end()) throw UsageError("unknown family '" + fba.family + "'");
            if (std::find(windows.begin(), windows.end(), fba.window) == windows.end()) throw UsageError("unknown window '" + fba.window + "'");
            return cmd_fbank(ctx, fba);
        }
        if (toy->parsed()) return cmd_toymodel(ctx, ta);
        if (met->parsed()) return cmd_metrics(ctx, m_ref, m_est, m_out);
    } catch (const UsageError &e) {
        err << "fsqkit: usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error &e) {
        err << "fsqkit: error: " << e.what();
        if (e.offset()) err << " (byte offset " << *e.offset() << ")";
        err << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception &e) {
        err << "fsqkit: error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}

int run(int argc, char **argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace fsqkit::cli
