#include "fsqkit/toymodel.hpp"

#include "fsqkit/error.hpp"
#include "fsqkit/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fsqkit::toymodel {

namespace {

using Mat = Eigen::MatrixXd;  // rows are time steps, columns are channels
using Vec = Eigen::RowVectorXd;

constexpr double layer_scale_init = 1e-2;
constexpr double rope_base = 10000.0;

Mat gaussian(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    Mat m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = stddev * standard_normal(rng);
    }
    return m;
}

// Weight-normalized convolution: effective tap weights are g * v / ||v|| per
// output channel, with g initialized to ||v||.
struct Conv {
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t pad_left = 0;
    std::size_t pad_right = 0;
    bool transposed = false;
    std::vector<Mat> taps;  // kernel x (in x out)

    Conv() = default;
    Conv(std::mt19937_64 &rng, std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t left,
         std::size_t right, bool transpose)
        : kernel(k), stride(s), pad_left(left), pad_right(right), transposed(transpose) {
        const double fan_in = static_cast<double>(transpose ? in : in * k);
        const Mat v = gaussian(rng, static_cast<Eigen::Index>(in * k), static_cast<Eigen::Index>(out),
                               1.0 / std::sqrt(fan_in));
        const Vec g = v.colwise().norm();
        Mat w = v;
        for (Eigen::Index o = 0; o < w.cols(); ++o) {
            const double n = v.col(o).norm();
            if (n > 0.0) w.col(o) *= g(o) / n;
        }
        for (std::size_t j = 0; j < k; ++j) {
            taps.push_back(w.middleRows(static_cast<Eigen::Index>(j * in), static_cast<Eigen::Index>(in)));
        }
    }

    Mat operator()(const Mat &x) const {
        const auto out_ch = taps.front().cols();
        if (transposed) {
            Mat y = Mat::Zero(x.rows() * static_cast<Eigen::Index>(stride), out_ch);
            for (std::size_t j = 0; j < kernel; ++j) {
                const Mat part = x * taps[j];
                for (Eigen::Index t = 0; t < x.rows(); ++t) {
                    const auto row = t * static_cast<Eigen::Index>(stride) + static_cast<Eigen::Index>(j);
                    if (row < y.rows()) y.row(row) += part.row(t);
                }
            }
            return y;
        }
        const auto T = x.rows();
        const auto padded = T + static_cast<Eigen::Index>(pad_left + pad_right);
        const auto k = static_cast<Eigen::Index>(kernel);
        const auto s = static_cast<Eigen::Index>(stride);
        const Eigen::Index out_len = padded >= k ? (padded - k) / s + 1 : 0;
        Mat y = Mat::Zero(out_len, out_ch);
        for (std::size_t j = 0; j < kernel; ++j) {
            Mat gathered = Mat::Zero(out_len, x.cols());
            for (Eigen::Index t = 0; t < out_len; ++t) {
                const auto src = t * s + static_cast<Eigen::Index>(j) - static_cast<Eigen::Index>(pad_left);
                if (src >= 0 && src < T) gathered.row(t) = x.row(src);
            }
            y.noalias() += gathered * taps[j];
        }
        return y;
    }

    double gain_bound() const {
        double s = 0.0;
        for (const auto &t : taps) s += t.norm();
        return s;
    }
};

Mat layer_norm(const Mat &x, double eps) {
    Mat y(x.rows(), x.cols());
    const double n = static_cast<double>(x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const double mean = x.row(t).mean();
        const double var = (x.row(t).array() - mean).square().sum() / n;
        y.row(t) = (x.row(t).array() - mean) / (std::sqrt(var) + eps);
    }
    return y;
}

double silu(double v) { return v / (1.0 + std::exp(-v)); }

struct Recorder {
    double max_rms = 0.0;
    std::string stage;
    bool finite = true;

    void operator()(const Mat &m, const std::string &name) {
        if (!m.allFinite()) finite = false;
        if (m.cols() == 0) return;
        for (Eigen::Index t = 0; t < m.rows(); ++t) {
            const double rms = std::sqrt(m.row(t).squaredNorm() / static_cast<double>(m.cols()));
            if (rms > max_rms) {
                max_rms = rms;
                stage = name;
            }
        }
    }
};

struct Transformer {
    Mat wq, wk, wv, wo, w_in, w_out;
    Vec ls_attn, ls_ff;
    std::size_t heads = 1;
    std::size_t head_dim = 1;
    std::size_t left = 0;
    std::size_t right = 0;
    double eps = 1e-2;

    Transformer(std::mt19937_64 &rng, const ModelSpec &spec) {
        const auto d = static_cast<Eigen::Index>(spec.dim);
        const auto hidden = static_cast<Eigen::Index>(spec.dim * spec.ff_expansion);
        const double s = 1.0 / std::sqrt(static_cast<double>(spec.dim));
        wq = gaussian(rng, d, d, s);
        wk = gaussian(rng, d, d, s);
        wv = gaussian(rng, d, d, s);
        wo = gaussian(rng, d, d, s);
        w_in = gaussian(rng, d, 2 * hidden, s);
        w_out = gaussian(rng, hidden, d, 1.0 / std::sqrt(static_cast<double>(hidden)));
        ls_attn = Vec::Constant(d, layer_scale_init);
        ls_ff = Vec::Constant(d, layer_scale_init);
        head_dim = spec.head_dim;
        heads = spec.dim / spec.head_dim;
        eps = spec.eps;
        if (spec.causal) {
            left = spec.window - 1;
        } else {
            left = spec.window / 2;
            right = spec.window - 1 - left;
        }
    }

    // Per-head RMS normalization followed by rotary position encoding.
    void qk_prepare(Mat &m) const {
        const auto hd = static_cast<Eigen::Index>(head_dim);
        const auto half = hd / 2;
        for (Eigen::Index t = 0; t < m.rows(); ++t) {
            for (std::size_t h = 0; h < heads; ++h) {
                auto seg = m.row(t).segment(static_cast<Eigen::Index>(h) * hd, hd);
                const double rms = std::sqrt(seg.squaredNorm() / static_cast<double>(hd));
                seg /= rms + eps;
                for (Eigen::Index i = 0; i < half; ++i) {
                    const double theta = static_cast<double>(t) *
                                         std::pow(rope_base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
                    const double c = std::cos(theta), sn = std::sin(theta);
                    const double a = seg(2 * i), b = seg(2 * i + 1);
                    seg(2 * i) = a * c - b * sn;
                    seg(2 * i + 1) = a * sn + b * c;
                }
            }
        }
    }

    Mat attention(const Mat &x) const {
        Mat q = x * wq;
        Mat k = x * wk;
        const Mat v = x * wv;
        qk_prepare(q);
        qk_prepare(k);
        const auto T = x.rows();
        const auto hd = static_cast<Eigen::Index>(head_dim);
        const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
        Mat out = Mat::Zero(T, x.cols());
        std::vector<double> logits;
        for (Eigen::Index t = 0; t < T; ++t) {
            const auto lo = std::max<Eigen::Index>(0, t - static_cast<Eigen::Index>(left));
            const auto hi = std::min<Eigen::Index>(T - 1, t + static_cast<Eigen::Index>(right));
            for (std::size_t h = 0; h < heads; ++h) {
                const auto off = static_cast<Eigen::Index>(h) * hd;
                logits.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
                double peak = -std::numeric_limits<double>::infinity();
                for (auto j = lo; j <= hi; ++j) {
                    const double l = scale * q.row(t).segment(off, hd).dot(k.row(j).segment(off, hd));
                    logits[static_cast<std::size_t>(j - lo)] = l;
                    peak = std::max(peak, l);
                }
                double total = 0.0;
                for (auto &l : logits) {
                    l = std::exp(l - peak);
                    total += l;
                }
                for (auto j = lo; j <= hi; ++j) {
                    out.row(t).segment(off, hd) += (logits[static_cast<std::size_t>(j - lo)] / total) *
                                                   v.row(j).segment(off, hd);
                }
            }
        }
        return out * wo;
    }

    Mat feedforward(const Mat &x) const {
        const Mat a = x * w_in;
        const auto hidden = w_out.rows();
        Mat gated(x.rows(), hidden);
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            for (Eigen::Index i = 0; i < hidden; ++i) gated(t, i) = silu(a(t, i)) * a(t, hidden + i);
        }
        return gated * w_out;
    }

    Mat operator()(const Mat &x, Recorder *rec, const std::string &name) const {
        const Mat n1 = layer_norm(x, eps);
        const Mat a = attention(n1);
        Mat h = x + (a.array().rowwise() * ls_attn.array()).matrix();
        const Mat n2 = layer_norm(h, eps);
        const Mat f = feedforward(n2);
        Mat y = h + (f.array().rowwise() * ls_ff.array()).matrix();
        if (rec) {
            (*rec)(n1, name + ".norm1");
            (*rec)(a, name + ".attn");
            (*rec)(h, name + ".resid1");
            (*rec)(n2, name + ".norm2");
            (*rec)(f, name + ".ffn");
            (*rec)(y, name + ".out");
        }
        return y;
    }

    double gain_db() const {
        auto db = [](double g) { return std::max(0.0, 20.0 * std::log10(g)); };
        const double ls = std::max(ls_attn.cwiseAbs().maxCoeff(), ls_ff.cwiseAbs().maxCoeff());
        return db(wv.norm()) + db(wo.norm()) + db(w_in.norm()) + db(w_out.norm()) + 2.0 * db(ls) +
               2.0 * 20.0 * std::log10(2.0);
    }

    void append(std::vector<double> &out) const {
        for (const Mat *m : {&wq, &wk, &wv, &wo, &w_in, &w_out}) out.insert(out.end(), m->data(), m->data() + m->size());
        out.insert(out.end(), ls_attn.data(), ls_attn.data() + ls_attn.size());
        out.insert(out.end(), ls_ff.data(), ls_ff.data() + ls_ff.size());
    }
};

struct Stage {
    Conv resample;                  // strided conv (encoder) or transposed conv (decoder); kernel 0 if absent
    bool has_resample = false;
    std::vector<Transformer> layers;
};

}  // namespace

void ModelSpec::validate() const {
    auto fail = [](const std::string &m) { throw Error(ErrorKind::invalid_config, m); };
    if (patch_size < 1) fail("patch size must be positive");
    if (dim < 1 || head_dim < 1) fail("dimensions must be positive");
    if (dim % head_dim != 0) fail("embedding dim must be a multiple of the head dim");
    if (head_dim % 2 != 0) fail("head dim must be even for rotary embeddings");
    if (window < 1) fail("attention window must be >= 1");
    if (!(eps > 0.0)) fail("layer-norm epsilon must be positive");
    if (ff_expansion < 1) fail("feedforward expansion must be >= 1");
    if (sample_rate < 1) fail("sample rate must be positive");
    if (levels.empty()) fail("quantizer needs at least one dimension");
    for (const auto &b : blocks) {
        if (b.stride < 1) fail("block stride must be >= 1");
    }
    (void)hop();
    fsq::QuantizerSpec(levels, frame_rate());
}

std::size_t ModelSpec::hop() const {
    std::size_t h = patch_size;
    for (const auto &b : blocks) {
        if (b.stride == 0 || h > std::numeric_limits<std::uint32_t>::max() / b.stride) {
            throw Error(ErrorKind::invalid_config, "total downsampling factor is too large");
        }
        h *= b.stride;
    }
    return h;
}

Rational ModelSpec::frame_rate() const {
    return Rational(static_cast<std::int64_t>(sample_rate), static_cast<std::int64_t>(hop()));
}

ModelSpec ModelSpec::reference_shape(std::size_t dim) {
    ModelSpec s;
    s.dim = dim;
    s.blocks = {{8, 1}, {20, 2}};
    s.window = 128;
    return s;
}

struct Model::Impl {
    ModelSpec spec;
    fsq::QuantizerSpec quantizer;
    Conv enc_in, enc_out, dec_in, dec_out;
    std::vector<Stage> encoder;  // in block order
    std::vector<Stage> decoder;  // in mirrored order

    explicit Impl(const ModelSpec &s) : spec(s), quantizer(s.levels, s.frame_rate()) {
        std::mt19937_64 rng(spec.seed);
        const std::size_t left = spec.causal ? 2 : 1;
        const std::size_t right = spec.causal ? 0 : 1;
        const std::size_t d = spec.levels.size();
        enc_in = Conv(rng, spec.patch_size, spec.dim, 3, 1, left, right, false);
        for (const auto &b : spec.blocks) {
            Stage st;
            if (b.stride > 1) {
                st.resample = Conv(rng, spec.dim, spec.dim, b.stride, b.stride, 0, 0, false);
                st.has_resample = true;
            }
            for (std::size_t i = 0; i < b.layers; ++i) st.layers.emplace_back(rng, spec);
            encoder.push_back(std::move(st));
        }
        enc_out = Conv(rng, spec.dim, d, 3, 1, left, right, false);
        dec_in = Conv(rng, d, spec.dim, 3, 1, left, right, false);
        for (auto it = spec.blocks.rbegin(); it != spec.blocks.rend(); ++it) {
            Stage st;
            for (std::size_t i = 0; i < it->layers; ++i) st.layers.emplace_back(rng, spec);
            if (it->stride > 1) {
                st.resample = Conv(rng, spec.dim, spec.dim, it->stride, it->stride, 0, 0, true);
                st.has_resample = true;
            }
            decoder.push_back(std::move(st));
        }
        dec_out = Conv(rng, spec.dim, spec.patch_size, 3, 1, left, right, false);
    }

    Mat patch(std::span<const double> x) const {
        const std::size_t hop = spec.hop();
        const std::size_t padded = (x.size() + hop - 1) / hop * hop;
        const auto frames = static_cast<Eigen::Index>(padded / spec.patch_size);
        Mat m = Mat::Zero(frames, static_cast<Eigen::Index>(spec.patch_size));
        for (std::size_t i = 0; i < x.size(); ++i) {
            m(static_cast<Eigen::Index>(i / spec.patch_size), static_cast<Eigen::Index>(i % spec.patch_size)) = x[i];
        }
        return m;
    }

    // Pre-tanh latent, frames x d.
    Mat encode_raw(std::span<const double> x, Recorder *rec) const {
        Mat h = enc_in(patch(x));
        if (rec) (*rec)(h, "encoder.input_conv");
        for (std::size_t b = 0; b < encoder.size(); ++b) {
            const auto &st = encoder[b];
            const std::string prefix = "encoder.block" + std::to_string(b);
            if (st.has_resample) {
                h = st.resample(h);
                if (rec) (*rec)(h, prefix + ".downsample");
            }
            for (std::size_t l = 0; l < st.layers.size(); ++l) h = st.layers[l](h, rec, prefix + ".layer" + std::to_string(l));
        }
        Mat z = enc_out(h);
        if (rec) (*rec)(z, "encoder.output_conv");
        return z;
    }

    std::vector<double> decode_matrix(const Mat &latent, Recorder *rec) const {
        Mat h = dec_in(latent);
        if (rec) (*rec)(h, "decoder.input_conv");
        for (std::size_t b = 0; b < decoder.size(); ++b) {
            const auto &st = decoder[b];
            const std::string prefix = "decoder.block" + std::to_string(b);
            for (std::size_t l = 0; l < st.layers.size(); ++l) h = st.layers[l](h, rec, prefix + ".layer" + std::to_string(l));
            if (st.has_resample) {
                h = st.resample(h);
                if (rec) (*rec)(h, prefix + ".upsample");
            }
        }
        const Mat y = dec_out(h);
        if (rec) (*rec)(y, "decoder.output_conv");
        std::vector<double> out(static_cast<std::size_t>(y.size()));
        for (Eigen::Index t = 0; t < y.rows(); ++t) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) out[static_cast<std::size_t>(t * y.cols() + c)] = y(t, c);
        }
        return out;
    }

    LatentSequence to_latents(const Mat &z) const {
        LatentSequence l;
        l.frames = static_cast<std::size_t>(z.rows());
        l.dims = static_cast<std::size_t>(z.cols());
        l.frame_rate = quantizer.frame_rate();
        l.values.resize(l.frames * l.dims);
        for (std::size_t t = 0; t < l.frames; ++t) {
            for (std::size_t c = 0; c < l.dims; ++c) {
                l.values[t * l.dims + c] = std::tanh(z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)));
            }
        }
        return l;
    }

    Mat from_latents(const LatentSequence &l) const {
        if (l.dims != spec.levels.size() || l.values.size() != l.frames * l.dims) {
            throw Error(ErrorKind::decode_error, "latent shape does not match the model bottleneck");
        }
        Mat m(static_cast<Eigen::Index>(l.frames), static_cast<Eigen::Index>(l.dims));
        for (std::size_t t = 0; t < l.frames; ++t) {
            for (std::size_t c = 0; c < l.dims; ++c) {
                m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = l.values[t * l.dims + c];
            }
        }
        return m;
    }
};

Model::Model(const ModelSpec &spec) {
    spec.validate();
    impl_ = std::make_unique<Impl>(spec);
}

Model::~Model() = default;
Model::Model(Model &&) noexcept = default;
Model &Model::operator=(Model &&) noexcept = default;

const ModelSpec &Model::spec() const { return impl_->spec; }
const fsq::QuantizerSpec &Model::quantizer() const { return impl_->quantizer; }

Encoded Model::encode(std::span<const double> x) const {
    const Mat z = impl_->encode_raw(x, nullptr);
    Encoded e;
    e.latents = impl_->to_latents(z);
    e.tokens.header.frame_rate = impl_->quantizer.frame_rate();
    e.tokens.header.dims = static_cast<int>(z.cols());
    e.tokens.header.stage_levels = {impl_->spec.levels};
    e.tokens.tokens.reserve(static_cast<std::size_t>(z.rows()));
    std::vector<double> row(static_cast<std::size_t>(z.cols()));
    for (Eigen::Index t = 0; t < z.rows(); ++t) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) row[static_cast<std::size_t>(c)] = z(t, c);
        e.tokens.tokens.push_back(fsq::quantize_vector(row, impl_->quantizer).index);
    }
    return e;
}

LatentSequence Model::encode_latents(std::span<const double> x) const {
    return impl_->to_latents(impl_->encode_raw(x, nullptr));
}

std::vector<double> Model::decode(const bitstream::TokenStream &tokens) const {
    const auto &q = impl_->quantizer;
    if (tokens.header.dims != q.dims() || tokens.header.stage_levels.size() != 1 ||
        tokens.header.stage_levels.front() != q.levels() || tokens.header.frame_rate != q.frame_rate()) {
        throw Error(ErrorKind::decode_error, "token stream does not match the model quantizer");
    }
    try {
        tokens.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::decode_error, e.what());
    }
    LatentSequence l;
    l.frames = tokens.tokens.size();
    l.dims = static_cast<std::size_t>(q.dims());
    l.frame_rate = q.frame_rate();
    l.values.reserve(l.frames * l.dims);
    for (auto t : tokens.tokens) {
        const auto v = fsq::token_to_values(t, q);
        l.values.insert(l.values.end(), v.begin(), v.end());
    }
    return decode_latents(l);
}

std::vector<double> Model::decode_latents(const LatentSequence &latents) const {
    return impl_->decode_matrix(impl_->from_latents(latents), nullptr);
}

std::vector<double> Model::reconstruct(std::span<const double> x) const {
    const Mat z = impl_->encode_raw(x, nullptr);
    return impl_->decode_matrix(z.array().tanh().matrix(), nullptr);
}

std::vector<double> Model::parameters() const {
    std::vector<double> out;
    auto conv = [&](const Conv &c) {
        for (const auto &t : c.taps) out.insert(out.end(), t.data(), t.data() + t.size());
    };
    auto stages = [&](const std::vector<Stage> &ss) {
        for (const auto &st : ss) {
            if (st.has_resample) conv(st.resample);
            for (const auto &l : st.layers) l.append(out);
        }
    };
    conv(impl_->enc_in);
    stages(impl_->encoder);
    conv(impl_->enc_out);
    conv(impl_->dec_in);
    stages(impl_->decoder);
    conv(impl_->dec_out);
    return out;
}

double Model::linear_gain_bound_db() const {
    auto db = [](double g) { return std::max(0.0, 20.0 * std::log10(g)); };
    double total = 0.0;
    for (const Conv *c : {&impl_->enc_in, &impl_->enc_out, &impl_->dec_in, &impl_->dec_out}) total += db(c->gain_bound());
    for (const auto *ss : {&impl_->encoder, &impl_->decoder}) {
        for (const auto &st : *ss) {
            if (st.has_resample) total += db(st.resample.gain_bound());
            for (const auto &l : st.layers) total += l.gain_db();
        }
    }
    return total;
}

ActivationStats Model::activation_stats(std::span<const double> x) const {
    ActivationStats s;
    double sq = 0.0;
    for (double v : x) sq += v * v;
    s.input_rms = x.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(x.size()));
    Recorder rec;
    const Mat z = impl_->encode_raw(x, &rec);
    const Mat latent = z.array().tanh().matrix();
    rec(latent, "bottleneck");
    impl_->decode_matrix(latent, &rec);
    s.max_rms = rec.max_rms;
    s.max_stage = rec.stage;
    s.finite = rec.finite;
    s.max_gain_db = s.input_rms > 0.0 && s.max_rms > 0.0 ? 20.0 * std::log10(s.max_rms / s.input_rms)
                                                         : (s.max_rms > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return s;
}

Model build(const ModelSpec &spec) { return Model(spec); }

std::vector<analysis::LayerSpec> layer_specs(const ModelSpec &spec) {
    spec.validate();
    using analysis::LayerKind;
    using analysis::LayerSpec;
    const double sr = static_cast<double>(spec.sample_rate);
    std::vector<double> rates{sr / static_cast<double>(spec.patch_size)};
    for (const auto &b : spec.blocks) rates.push_back(rates.back() / static_cast<double>(b.stride));

    std::vector<LayerSpec> layers;
    const bool c = spec.causal;
    layers.push_back({LayerKind::conv, spec.patch_size, spec.patch_size, 1, c, sr});
    layers.push_back({LayerKind::conv, 3, 1, 1, c, rates[0]});
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
        const auto &blk = spec.blocks[b];
        if (blk.stride > 1) layers.push_back({LayerKind::conv, blk.stride, blk.stride, 1, c, rates[b]});
        for (std::size_t i = 0; i < blk.layers; ++i) layers.push_back({LayerKind::attention, spec.window, 1, 1, c, rates[b + 1]});
    }
    layers.push_back({LayerKind::conv, 3, 1, 1, c, rates.back()});
    layers.push_back({LayerKind::conv, 3, 1, 1, c, rates.back()});
    for (std::size_t b = spec.blocks.size(); b-- > 0;) {
        const auto &blk = spec.blocks[b];
        for (std::size_t i = 0; i < blk.layers; ++i) layers.push_back({LayerKind::attention, spec.window, 1, 1, c, rates[b + 1]});
        if (blk.stride > 1) layers.push_back({LayerKind::transposed_conv, blk.stride, blk.stride, 1, c, rates[b]});
    }
    layers.push_back({LayerKind::conv, 3, 1, 1, c, rates[0]});
    layers.push_back({LayerKind::transposed_conv, spec.patch_size, spec.patch_size, 1, c, sr});
    return layers;
}

double analytic_receptive_field(const ModelSpec &spec) { return analysis::receptive_field(layer_specs(spec)).total; }

namespace {

std::vector<double> seeded_noise(std::uint64_t seed, std::size_t n, double amplitude) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(n);
    for (auto &v : x) v = amplitude * standard_normal(rng);
    return x;
}

}  // namespace

RfMeasurement measure_receptive_field(const Model &model, std::size_t length) {
    const auto &spec = model.spec();
    const double analytic = analytic_receptive_field(spec) * static_cast<double>(spec.sample_rate);
    if (static_cast<double>(length) <= 2.0 * analytic) {
        throw Error(ErrorKind::saturated_measurement, "input length must exceed twice the analytic receptive field (" +
                                                          std::to_string(static_cast<std::size_t>(std::ceil(2.0 * analytic))) +
                                                          " samples)");
    }
    auto x = seeded_noise(spec.seed ^ 0x5eed, length, 0.1);
    RfMeasurement m;
    m.probe = length / 2;
    const auto base = model.reconstruct(x);
    x[m.probe] += 0.1;
    const auto moved = model.reconstruct(x);
    bool any = false;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (std::abs(moved[i] - base[i]) > 1e-7) {
            if (!any) m.first = i;
            m.last = i;
            any = true;
        }
    }
    if (!any) return m;
    if (m.first == 0 || m.last + 1 >= base.size()) {
        throw Error(ErrorKind::saturated_measurement, "response reaches the signal edge");
    }
    m.support_samples = m.last - m.first + 1;
    m.seconds = static_cast<double>(m.support_samples) / static_cast<double>(spec.sample_rate);
    return m;
}

CausalityReport check_causality(const Model &model, std::size_t length) {
    const auto &spec = model.spec();
    const std::size_t hop = spec.hop();
    if (length == 0) length = 16 * hop;
    if (length < 2 * hop) throw Error(ErrorKind::invalid_input, "causality probe needs at least two latent frames");
    auto x = seeded_noise(spec.seed ^ 0xca05a1, length, 0.1);
    CausalityReport r;
    r.probe = length / 2 + hop / 3;
    r.frame_start = r.probe - r.probe % hop;
    r.latency_samples = hop;
    r.latency_seconds = static_cast<double>(hop) / static_cast<double>(spec.sample_rate);
    const auto base = model.reconstruct(x);
    x[r.probe] += 0.1;
    const auto moved = model.reconstruct(x);
    for (std::size_t i = 0; i < r.probe; ++i) {
        const double d = std::abs(moved[i] - base[i]);
        if (i < r.frame_start) r.max_leakage = std::max(r.max_leakage, d);
        r.leakage_before_probe = std::max(r.leakage_before_probe, d);
    }
    r.causal = r.max_leakage == 0.0;
    return r;
}

}  // namespace fsqkit::toymodel
