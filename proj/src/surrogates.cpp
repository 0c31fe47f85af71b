#include "ditchkit/surrogates.hpp"

#include <algorithm>
#include <cmath>

#include "ditchkit/error.hpp"
#include "ditchkit/nn/init.hpp"

namespace ditchkit::surrogates {

using nn::Tensor;
using Seq = nn::Sequential<float>;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::cjm: return "cjm";
        case Variant::cjmdd: return "cjmdd";
        case Variant::cjmnlb: return "cjmnlb";
        case Variant::kae: return "kae";
        case Variant::unfilter: return "unfilter";
    }
    return "unknown";
}

Variant parse_variant(const std::string& s) {
    std::string k = s;
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (Variant v : {Variant::cjm, Variant::cjmdd, Variant::cjmnlb, Variant::kae, Variant::unfilter})
        if (to_string(v) == k) return v;
    throw ConfigError("unknown architecture '" + s + "' (cjm, cjmdd, cjmnlb, kae, unfilter)");
}

ArchConfig ArchConfig::full(Variant v) {
    ArchConfig a;
    a.variant = v;
    return a;
}

ArchConfig ArchConfig::desk(Variant v, std::size_t patch) {
    ArchConfig a;
    a.variant = v;
    a.patch = patch;
    a.lstm_units = 32;
    return a;
}

void ArchConfig::validate() const {
    if (patch < 16 || patch % 16 != 0)
        throw ConfigError("patch size " + std::to_string(patch) + " must be a multiple of 16 (four stride-2 stages)");
    if (window == 0) throw ConfigError("input window must be at least 1");
    if (latent == 0 || lstm_units == 0) throw ConfigError("latent and LSTM widths must be positive");
    if (variant == Variant::kae && latent % 2 != 0) throw ConfigError("KAE latent width must be even");
    for (std::size_t f : filters)
        if (f == 0) throw ConfigError("filter counts must be positive");
    if (variant == Variant::cjmnlb && (filters[2] % 2 != 0 || filters[3] % 2 != 0))
        throw ConfigError("non-local blocks need even channel counts");
}

void to_json(nlohmann::json& j, const ArchConfig& a) {
    j = {{"variant", to_string(a.variant)}, {"patch", a.patch},   {"window", a.window},
         {"latent", a.latent},              {"filters", a.filters}, {"lstm_units", a.lstm_units}};
}

void from_json(const nlohmann::json& j, ArchConfig& a) {
    a = ArchConfig::full(parse_variant(j.at("variant").get<std::string>()));
    a.patch = j.value("patch", a.patch);
    a.window = j.value("window", a.window);
    a.latent = j.value("latent", a.latent);
    if (j.contains("filters")) a.filters = j.at("filters").get<std::array<std::size_t, 4>>();
    a.lstm_units = j.value("lstm_units", a.lstm_units);
}

namespace {

using nn::Activation;

template <class L, class... Args>
void push(Seq& s, Args&&... args) {
    s.add(std::make_unique<L>(std::forward<Args>(args)...));
}

void leaky(Seq& s) { push<nn::Pointwise<float>>(s, Activation::leaky_relu); }

// Per-slice convolutional encoder: (B*window, H, W, 1) -> (B*window, h, h, f4)
void add_conv_encoder(Seq& s, nn::ParamStore<float>& store, const ArchConfig& a, bool nonlocal) {
    const auto& f = a.filters;
    std::size_t cin = 1;
    for (std::size_t i = 0; i < 4; ++i) {
        push<nn::Conv2D<float>>(s, store, "enc.conv" + std::to_string(i + 1), cin, f[i], 3, 2);
        leaky(s);
        if (nonlocal && i >= 2) push<nn::NonLocal<float>>(s, store, "enc.nonlocal" + std::to_string(i + 1), f[i]);
        cin = f[i];
    }
}

// (B, flat) -> (B, H, W)
void add_deconv_decoder(Seq& s, nn::ParamStore<float>& store, const ArchConfig& a, std::size_t in) {
    const auto& f = a.filters;
    const std::size_t h = a.code_size(), flat = h * h * f[3];
    push<nn::Dense<float>>(s, store, "dec.dense", in, flat);
    leaky(s);
    push<nn::Reshape<float>>(s, nn::Shape{0, h, h, f[3]});
    const std::size_t outs[4] = {f[2], f[1], f[0], 1};
    std::size_t cin = f[3];
    for (std::size_t i = 0; i < 4; ++i) {
        push<nn::Conv2DTranspose<float>>(s, store, "dec.deconv" + std::to_string(i + 1), cin, outs[i], 3, 2);
        if (i < 3) leaky(s);
        cin = outs[i];
    }
    push<nn::Reshape<float>>(s, nn::Shape{0, a.patch, a.patch});
}

}  // namespace

Model::Model(const ArchConfig& arch, std::uint64_t seed) : arch_(arch) {
    arch_.validate();
    const std::size_t H = arch_.patch, l = arch_.window, h = arch_.code_size();
    const std::size_t flat = h * h * arch_.filters[3], U = arch_.lstm_units, m = arch_.latent;
    nn::Rng rng(seed);

    switch (arch_.variant) {
        case Variant::cjm:
        case Variant::cjmnlb:
        case Variant::cjmdd: {
            net_ = std::make_unique<Seq>("net");
            Seq& s = *net_;
            push<nn::Reshape<float>>(s, nn::Shape{0, H, H, 1});
            add_conv_encoder(s, store_, arch_, arch_.variant == Variant::cjmnlb);
            push<nn::Reshape<float>>(s, nn::Shape{0, flat});
            push<nn::Dense<float>>(s, store_, "enc.dense", flat, m);
            leaky(s);
            push<nn::Reshape<float>>(s, nn::Shape{0, l, m});
            push<nn::LSTM<float>>(s, store_, "lstm1", m, U, true);
            push<nn::LSTM<float>>(s, store_, "lstm2", U, U, false);
            if (arch_.variant == Variant::cjmdd) {
                push<nn::Dense<float>>(s, store_, "dec.latent", U, m);
                leaky(s);
                add_deconv_decoder(s, store_, arch_, m);
            } else {
                push<nn::Dense<float>>(s, store_, "dec.out", U, H * H);
                push<nn::Reshape<float>>(s, nn::Shape{0, H, H});
            }
            net_->initialize(rng);
            break;
        }
        case Variant::kae: {
            enc_ = std::make_unique<Seq>("encoder");
            push<nn::Reshape<float>>(*enc_, nn::Shape{0, H, H, 1});
            add_conv_encoder(*enc_, store_, arch_, false);
            push<nn::Reshape<float>>(*enc_, nn::Shape{0, l * flat});
            push<nn::Dense<float>>(*enc_, store_, "enc.dense", l * flat, m);
            K_ = std::make_unique<nn::Dense<float>>(store_, "koopman", m, m, false);
            dec_ = std::make_unique<Seq>("decoder");
            add_deconv_decoder(*dec_, store_, arch_, m);
            enc_->initialize(rng);
            const auto K = nn::koopman_rotation_blocks(m, nn::rotation_angles(m));
            for (std::size_t i = 0; i < K.size(); ++i) K_->weight().value[i] = static_cast<float>(K[i]);
            dec_->initialize(rng);
            break;
        }
        case Variant::unfilter: {
            net_ = std::make_unique<Seq>("unfilter");
            Seq& s = *net_;
            push<nn::Reshape<float>>(s, nn::Shape{0, H, H, 1});
            const std::size_t widths[4] = {16, 32, 64, 1};
            std::size_t cin = 1;
            for (std::size_t i = 0; i < 4; ++i) {
                push<nn::Conv2D<float>>(s, store_, "conv" + std::to_string(i + 1), cin, widths[i], 3, 1);
                if (i < 3) leaky(s);
                cin = widths[i];
            }
            push<nn::Reshape<float>>(s, nn::Shape{0, H, H});
            net_->initialize(rng);
            break;
        }
    }
}

namespace {

void check_windows(const Tensor<float>& x, const ArchConfig& a, std::size_t steps) {
    if (x.rank() != 4 || x.dim(1) != steps || x.dim(2) != a.patch || x.dim(3) != a.patch)
        throw ShapeError(to_string(a.variant) + ": expected (B, " + std::to_string(steps) + ", " +
                         std::to_string(a.patch) + ", " + std::to_string(a.patch) + "), got " + nn::shape_str(x.shape));
}

// Time slices [from, from + count) of (B, T, H, W).
Tensor<float> slices(const Tensor<float>& x, std::size_t from, std::size_t count) {
    const std::size_t B = x.dim(0), T = x.dim(1), F = x.dim(2) * x.dim(3);
    Tensor<float> out({B, count, x.dim(2), x.dim(3)});
    for (std::size_t b = 0; b < B; ++b)
        std::copy_n(x.ptr() + (b * T + from) * F, count * F, out.ptr() + b * count * F);
    return out;
}

Tensor<float> concat_batch(const Tensor<float>& a, const Tensor<float>& b) {
    nn::Shape s = a.shape;
    s[0] += b.shape[0];
    Tensor<float> out(s);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

Tensor<float> batch_range(const Tensor<float>& x, std::size_t from, std::size_t count) {
    nn::Shape s = x.shape;
    const std::size_t per = x.size() / s[0];
    s[0] = count;
    return Tensor<float>(s, std::vector<float>(x.data.begin() + static_cast<std::ptrdiff_t>(from * per),
                                               x.data.begin() + static_cast<std::ptrdiff_t>((from + count) * per)));
}

// Adds d/dpred of w * mean((pred - target)^2) into grad and returns the MSE.
double mse_grad(const float* pred, const float* target, std::size_t n, double w, float* grad) {
    double s = 0.0;
    const double scale = 2.0 * w / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        s += d * d;
        grad[i] += static_cast<float>(scale * d);
    }
    return s / static_cast<double>(n);
}

}  // namespace

Tensor<float> Model::predict(const Tensor<float>& x) {
    if (arch_.variant == Variant::unfilter) return net_->forward(x.reshaped({x.size() / (arch_.patch * arch_.patch), arch_.patch, arch_.patch}));
    check_windows(x, arch_, arch_.window);
    if (arch_.variant == Variant::kae) return decode(advance(encode(x)));
    return net_->forward(x);
}

Tensor<float> Model::encode(const Tensor<float>& windows) {
    if (!enc_) throw ConfigError("encode() is only defined for the KAE");
    check_windows(windows, arch_, arch_.window);
    return enc_->forward(windows);
}

Tensor<float> Model::advance(const Tensor<float>& z) {
    if (!K_) throw ConfigError("advance() is only defined for the KAE");
    return K_->forward(z);
}

Tensor<float> Model::decode(const Tensor<float>& z) {
    if (!dec_) throw ConfigError("decode() is only defined for the KAE");
    return dec_->forward(z);
}

std::vector<double> Model::koopman_matrix() const {
    if (!K_) throw ConfigError("koopman_matrix() is only defined for the KAE");
    const auto& v = store_.at("koopman.kernel").value.data;
    return {v.begin(), v.end()};
}

LossTerms Model::accumulate_gradients(const Tensor<float>& seq, const LossWeights& w) {
    if (arch_.variant == Variant::unfilter) throw ConfigError("UNFILTER trains on frame pairs");
    const std::size_t l = arch_.window, F = arch_.patch * arch_.patch;
    check_windows(seq, arch_, l + 1);
    const std::size_t B = seq.dim(0);
    LossTerms out;

    if (arch_.variant != Variant::kae) {
        const Tensor<float> pred = net_->forward(slices(seq, 0, l));
        const Tensor<float> target = slices(seq, l, 1);
        Tensor<float> grad(pred.shape);
        out.predict = mse_grad(pred.ptr(), target.ptr(), B * F, 1.0, grad.ptr());
        out.total = out.predict;
        net_->backward(grad);
        return out;
    }

    // both windows through the encoder in one batch
    const Tensor<float> Z = enc_->forward(concat_batch(slices(seq, 0, l), slices(seq, 1, l)));
    const std::size_t m = arch_.latent;
    const Tensor<float> z1 = batch_range(Z, 0, B), z2 = batch_range(Z, B, B);
    const Tensor<float> kz = K_->forward(z1);
    const Tensor<float> frames = dec_->forward(concat_batch(z1, kz));

    Tensor<float> dframes(frames.shape);
    const Tensor<float> x_t = slices(seq, l - 1, 1), x_next = slices(seq, l, 1);
    out.reconst = mse_grad(frames.ptr(), x_t.ptr(), B * F, w.reconst, dframes.ptr());
    out.predict = mse_grad(frames.ptr() + B * F, x_next.ptr(), B * F, w.predict, dframes.ptr() + B * F);

    Tensor<float> dkz(kz.shape), dz2(z2.shape);
    out.linear = mse_grad(kz.ptr(), z2.ptr(), B * m, w.linear, dkz.ptr());
    for (std::size_t i = 0; i < dz2.size(); ++i) dz2[i] = -dkz[i];
    out.total = w.reconst * out.reconst + w.predict * out.predict + w.linear * out.linear;

    const Tensor<float> dlat = dec_->backward(dframes);
    const Tensor<float> dz1_dec = batch_range(dlat, 0, B);
    Tensor<float> dkz_total = batch_range(dlat, B, B);
    for (std::size_t i = 0; i < dkz_total.size(); ++i) dkz_total[i] += dkz[i];
    Tensor<float> dz1 = K_->backward(dkz_total);
    for (std::size_t i = 0; i < dz1.size(); ++i) dz1[i] += dz1_dec[i];
    enc_->backward(concat_batch(dz1, dz2));
    return out;
}

double Model::accumulate_gradients_pairs(const Tensor<float>& input, const Tensor<float>& target) {
    if (arch_.variant != Variant::unfilter) throw ConfigError("frame-pair training is only defined for UNFILTER");
    if (input.size() != target.size()) throw ShapeError("unfilter: input and target sizes differ");
    const Tensor<float> pred = predict(input);
    Tensor<float> grad(pred.shape);
    const double loss = mse_grad(pred.ptr(), target.ptr(), pred.size(), 1.0, grad.ptr());
    net_->backward(grad);
    return loss;
}

std::string Model::metadata() const {
    nlohmann::json j = arch_;
    return j.dump();
}

std::size_t count_params(const ArchConfig& arch) { return Model(arch, 0).param_count(); }

ArchConfig arch_from_metadata(const std::string& metadata) {
    try {
        return nlohmann::json::parse(metadata).get<ArchConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint metadata: ") + e.what());
    }
}

namespace {

void check_start(const Model& m, const Tensor<float>& start) {
    const auto& a = m.arch();
    if (start.rank() != 3 || start.dim(0) != a.window || start.dim(1) != a.patch || start.dim(2) != a.patch)
        throw ShapeError("rollout start must be (" + std::to_string(a.window) + ", " + std::to_string(a.patch) + ", " +
                         std::to_string(a.patch) + "), got " + nn::shape_str(start.shape));
}

void check_step(const Tensor<float>& frame, std::size_t step) {
    for (float v : frame.data)
        if (!std::isfinite(v)) throw SolverError("rollout produced a non-finite value at step " + std::to_string(step));
}

}  // namespace

Tensor<float> rollout(Model& m, const Tensor<float>& start, std::size_t n_steps) {
    check_start(m, start);
    const auto& a = m.arch();
    const std::size_t F = a.patch * a.patch, l = a.window;
    Tensor<float> out({n_steps, a.patch, a.patch});
    Tensor<float> win({1, l, a.patch, a.patch}, start.data);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const Tensor<float> next = m.predict(win);
        check_step(next, n + 1);
        std::copy(next.data.begin(), next.data.end(), out.ptr() + n * F);
        std::copy(win.data.begin() + static_cast<std::ptrdiff_t>(F), win.data.end(), win.data.begin());
        std::copy(next.data.begin(), next.data.end(), win.data.end() - static_cast<std::ptrdiff_t>(F));
    }
    return out;
}

Tensor<float> kae_latent_rollout(Model& m, const Tensor<float>& start, std::size_t n_steps) {
    if (m.arch().variant != Variant::kae) throw ConfigError("latent rollout is only defined for the KAE");
    check_start(m, start);
    const auto& a = m.arch();
    const std::size_t F = a.patch * a.patch;
    Tensor<float> out({n_steps, a.patch, a.patch});
    Tensor<float> z = m.encode(Tensor<float>({1, a.window, a.patch, a.patch}, start.data));
    for (std::size_t n = 0; n < n_steps; ++n) {
        z = m.advance(z);
        const Tensor<float> frame = m.decode(z);
        check_step(frame, n + 1);
        std::copy(frame.data.begin(), frame.data.end(), out.ptr() + n * F);
    }
    return out;
}

}  // namespace ditchkit::surrogates
