#include "cpsw/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "cpsw/kernels.hpp"
#include "cpsw/propensity.hpp"
#include "cpsw/spectral.hpp"

namespace cpsw::learner {

namespace {

// Logit clamp bound guaranteeing loss <= omega: worst case loss is
// 2B + ln(m), so B = (omega - ln m) / 2.
double clamp_bound(double omega, int num_classes) {
    const double b = (omega - std::log(static_cast<double>(num_classes))) / 2.0;
    if (!(b > 0.0))
        fail(ErrorCode::config_invalid,
             "omega must exceed ln(num_classes) for the loss clamp");
    return b;
}

struct Activations {
    std::vector<double> hidden;        // tanh outputs
    std::vector<double> logits;        // raw
    std::vector<double> clamped;       // clamped logits
    std::vector<bool> pass;            // clamp pass-through per class
};

// Samples are processed in blocks so a w1 row streams once per block while
// the block's inputs stay cache-resident.
constexpr std::size_t kSampleBlock = 16;

void hidden_forward_batch(const ModelParams& p, const double* const* xs,
                          std::size_t n, double* hidden) {
    const std::size_t hid = static_cast<std::size_t>(p.hidden_dim);
    for (std::size_t s0 = 0; s0 < n; s0 += kSampleBlock) {
        const std::size_t s1 = std::min(n, s0 + kSampleBlock);
        for (int j = 0; j < p.hidden_dim; ++j) {
            const double* row =
                p.w1.data() + static_cast<std::size_t>(j) * p.input_dim;
            for (std::size_t s = s0; s < s1; ++s)
                hidden[s * hid + j] =
                    std::tanh(kernels::dot(row, xs[s], p.input_dim) +
                              p.b1[j]);
        }
    }
}

// g.w1 += sum_s outer(da[s], xs[s]); g.b1 += sum_s da[s]. Same blocking.
void hidden_grad_batch(const ModelParams& p, const double* const* xs,
                       const double* da, std::size_t n, Gradients& g) {
    const std::size_t hid = static_cast<std::size_t>(p.hidden_dim);
    for (std::size_t s0 = 0; s0 < n; s0 += kSampleBlock) {
        const std::size_t s1 = std::min(n, s0 + kSampleBlock);
        for (int j = 0; j < p.hidden_dim; ++j) {
            double* grow =
                g.w1.data() + static_cast<std::size_t>(j) * p.input_dim;
            for (std::size_t s = s0; s < s1; ++s) {
                const double d = da[s * hid + j];
                if (d == 0.0) continue;
                kernels::axpy(d, xs[s], grow, p.input_dim);
                g.b1[j] += d;
            }
        }
    }
}

void forward_parts(const ModelParams& p, const double* x, double bound,
                   Activations& act) {
    act.hidden.resize(p.hidden_dim);
    act.logits.resize(p.num_classes);
    act.clamped.resize(p.num_classes);
    act.pass.assign(p.num_classes, true);
    for (int j = 0; j < p.hidden_dim; ++j) {
        const double a =
            kernels::dot(p.w1.data() +
                             static_cast<std::size_t>(j) * p.input_dim,
                         x, p.input_dim) +
            p.b1[j];
        act.hidden[j] = std::tanh(a);
    }
    for (int k = 0; k < p.num_classes; ++k) {
        const double z =
            kernels::dot(p.w2.data() +
                             static_cast<std::size_t>(k) * p.hidden_dim,
                         act.hidden.data(), p.hidden_dim) +
            p.b2[k];
        act.logits[k] = z;
        if (z > bound) {
            act.clamped[k] = bound;
            act.pass[k] = false;
        } else if (z < -bound) {
            act.clamped[k] = -bound;
            act.pass[k] = false;
        } else {
            act.clamped[k] = z;
        }
    }
}

// Cross-entropy on clamped logits; dlogits (w.r.t. the clamped values)
// is softmax - onehot.
double cross_entropy(const std::vector<double>& clamped, int label,
                     std::vector<double>* dlogits) {
    const int m = static_cast<int>(clamped.size());
    double zmax = clamped[0];
    for (double z : clamped) zmax = std::max(zmax, z);
    double sum = 0.0;
    for (double z : clamped) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);
    if (dlogits) {
        dlogits->resize(m);
        for (int k = 0; k < m; ++k)
            (*dlogits)[k] = std::exp(clamped[k] - zmax) / sum;
        (*dlogits)[label] -= 1.0;
    }
    return lse - clamped[label];
}

void check_batch(const ModelParams& p, const Batch& batch) {
    if (batch.size() == 0) fail(ErrorCode::empty_batch, "empty batch");
    if (batch.input_dim != p.input_dim)
        fail(ErrorCode::shape_mismatch, "batch/input dimension mismatch");
    for (int label : batch.labels)
        if (label < 0 || label >= p.num_classes)
            fail(ErrorCode::shape_mismatch, "label outside class range");
    if (batch.labels.size() != batch.size())
        fail(ErrorCode::shape_mismatch, "labels misaligned with inputs");
}

struct GradAccum {
    Gradients g;

    explicit GradAccum(const ModelParams& p) {
        g.w1.assign(p.w1.size(), 0.0);
        g.b1.assign(p.b1.size(), 0.0);
        g.w2.assign(p.w2.size(), 0.0);
        g.b2.assign(p.b2.size(), 0.0);
    }
};

// One pass over the batch computing the loss report and, when acc is
// given, the gradient of base + alpha*psw + beta*ps. The hidden layer is
// evaluated with the blocked batch kernels; the small head is handled per
// sample.
LossReport evaluate_batch(const ModelParams& p, const Batch& batch,
                          double alpha, double beta, const LossConfig& cfg,
                          GradAccum* acc, bool freeze_head_for_ps = false) {
    check_batch(p, batch);
    if (alpha < 0.0 || beta < 0.0)
        fail(ErrorCode::config_invalid, "alpha and beta must be >= 0");
    const bool want_psw = alpha != 0.0;
    const bool want_ps = beta != 0.0;
    if (want_psw && batch.weights.size() != batch.size())
        fail(ErrorCode::missing_weights, "psw term requires weights");
    if (want_ps && batch.twins.size() != batch.size())
        fail(ErrorCode::missing_twins, "ps term requires simulated twins");

    const double bound = clamp_bound(cfg.omega, p.num_classes);
    const std::size_t n = batch.size();
    const double dn = static_cast<double>(n);
    const std::size_t hid = static_cast<std::size_t>(p.hidden_dim);
    const int m = p.num_classes;

    std::vector<double> hidden(n * hid), da;
    std::vector<double> clamped(m), dl(m);
    std::vector<bool> pass(m);
    if (acc) da.assign(n * hid, 0.0);

    double base_sum = 0.0, psw_sum = 0.0, ps_orig_sum = 0.0, ps_twin_sum = 0.0;

    // per_sample_coef: weight on this sample's cross-entropy inside the
    // combined gradient; head_coef differs only when the head is frozen
    // for the pairing loss.
    auto process = [&](const std::vector<const double*>& inputs,
                       bool twins) {
        hidden_forward_batch(p, inputs.data(), n, hidden.data());
        if (acc) std::fill(da.begin(), da.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* h = hidden.data() + i * hid;
            for (int k = 0; k < m; ++k) {
                const double z =
                    kernels::dot(p.w2.data() + static_cast<std::size_t>(k) *
                                                   hid,
                                 h, hid) +
                    p.b2[k];
                if (z > bound) {
                    clamped[k] = bound;
                    pass[k] = false;
                } else if (z < -bound) {
                    clamped[k] = -bound;
                    pass[k] = false;
                } else {
                    clamped[k] = z;
                    pass[k] = true;
                }
            }
            const double li =
                cross_entropy(clamped, batch.labels[i], acc ? &dl : nullptr);
            const double wi = want_psw ? batch.weights[i] : 0.0;
            double coef = 0.0, head_coef = 0.0;
            if (!twins) {
                base_sum += li;
                if (want_psw) psw_sum += wi * li;
                if (want_ps) ps_orig_sum += li;
                coef = (1.0 + alpha * wi) / dn +
                       (want_ps ? beta / (2.0 * dn) : 0.0);
                head_coef =
                    freeze_head_for_ps ? (1.0 + alpha * wi) / dn : coef;
            } else {
                ps_twin_sum += li;
                coef = beta / (2.0 * dn);
                head_coef = freeze_head_for_ps ? 0.0 : coef;
            }
            if (!acc) continue;
            double* da_row = da.data() + i * hid;
            for (int k = 0; k < m; ++k) {
                if (!pass[k]) continue; // clamped logits pass no gradient
                const double dk = dl[k];
                kernels::axpy(head_coef * dk, h,
                              acc->g.w2.data() +
                                  static_cast<std::size_t>(k) * hid,
                              hid);
                acc->g.b2[k] += head_coef * dk;
                kernels::axpy(coef * dk,
                              p.w2.data() + static_cast<std::size_t>(k) * hid,
                              da_row, hid);
            }
            for (std::size_t j = 0; j < hid; ++j)
                da_row[j] *= 1.0 - h[j] * h[j];
        }
        if (acc) hidden_grad_batch(p, inputs.data(), da.data(), n, acc->g);
    };

    process(batch.inputs, false);
    if (want_ps) process(batch.twins, true);

    LossReport r;
    r.alpha = alpha;
    r.beta = beta;
    r.base = base_sum / dn;
    r.psw = want_psw ? psw_sum / dn : 0.0;
    r.ps = want_ps ? (ps_orig_sum / dn + ps_twin_sum / dn) / 2.0 : 0.0;
    r.total = r.base + alpha * r.psw + beta * r.ps;
    return r;
}

} // namespace

ModelParams ModelParams::init(int input_dim, int hidden_dim, int num_classes,
                              rng::Rng& rng) {
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.num_classes = num_classes;
    p.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
    p.b1.assign(hidden_dim, 0.0);
    p.w2.resize(static_cast<std::size_t>(num_classes) * hidden_dim);
    p.b2.assign(num_classes, 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (auto& w : p.w1) w = rng.uniform(-s1, s1);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (auto& w : p.w2) w = rng.uniform(-s2, s2);
    return p;
}

std::size_t ModelParams::param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    return flat;
}

void ModelParams::unflatten(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        fail(ErrorCode::shape_mismatch, "flat parameter size mismatch");
    auto it = flat.begin();
    std::copy_n(it, w1.size(), w1.begin());
    it += static_cast<std::ptrdiff_t>(w1.size());
    std::copy_n(it, b1.size(), b1.begin());
    it += static_cast<std::ptrdiff_t>(b1.size());
    std::copy_n(it, w2.size(), w2.begin());
    it += static_cast<std::ptrdiff_t>(w2.size());
    std::copy_n(it, b2.size(), b2.begin());
}

std::vector<double> Gradients::flatten() const {
    std::vector<double> flat;
    flat.reserve(w1.size() + b1.size() + w2.size() + b2.size());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    return flat;
}

std::vector<double> forward(const ModelParams& p, const double* x) {
    Activations act;
    forward_parts(p, x, std::numeric_limits<double>::infinity(), act);
    for (double z : act.logits)
        if (!std::isfinite(z))
            fail(ErrorCode::non_finite_loss, "non-finite logits");
    return act.logits;
}

double loss_erm(const ModelParams& p, const Batch& batch,
                const LossConfig& cfg) {
    return evaluate_batch(p, batch, 0.0, 0.0, cfg, nullptr).base;
}

double loss_psw(const ModelParams& p, const Batch& batch,
                const LossConfig& cfg) {
    if (batch.weights.size() != batch.size())
        fail(ErrorCode::missing_weights, "loss_psw requires weights");
    return evaluate_batch(p, batch, 1.0, 0.0, cfg, nullptr).psw;
}

double loss_ps(const ModelParams& p, const Batch& batch,
               const LossConfig& cfg) {
    if (batch.twins.size() != batch.size())
        fail(ErrorCode::missing_twins, "loss_ps requires simulated twins");
    return evaluate_batch(p, batch, 0.0, 1.0, cfg, nullptr).ps;
}

LossReport total_loss(const ModelParams& p, const Batch& batch, double alpha,
                      double beta, const LossConfig& cfg) {
    return evaluate_batch(p, batch, alpha, beta, cfg, nullptr);
}

Gradients backward(const ModelParams& p, const Batch& batch, double alpha,
                   double beta, const LossConfig& cfg) {
    GradAccum acc(p);
    evaluate_batch(p, batch, alpha, beta, cfg, &acc);
    return std::move(acc.g);
}

// --- training ------------------------------------------------------------

namespace {

using spectral::FilterMask;
using spectral::ImageTensor;
using spectral::SpectrumGrid;

struct SpectraCache { // per domain, float32 planar re/im per image
    std::vector<float> re, im;
    std::size_t per_image = 0;
};

ImageTensor image_from_f32(const float* src, int h, int w, int c) {
    ImageTensor t = ImageTensor::zeros(h, w, c);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = src[i];
    return t;
}


struct DomainState {
    SpectraCache spectra;
    std::vector<float> high_images; // static masked-inverse images
    std::vector<float> low_images;
    propensity::Clustering c_cluster;
    propensity::Clustering s_cluster;
    propensity::PropensityTable table;
    std::vector<double> weight; // 1/pi per sample
};

// Frequency-split + clustering machinery shared by train() and the
// casestudy dump.
struct Pipeline {
    const TrainConfig& cfg;
    const std::vector<TrainDomain>& domains;
    int h, w, c, num_classes;
    FilterMask low_mask, high_mask;
    std::vector<DomainState> states;
    std::vector<CaseStudyRow> case_study;

    Pipeline(const TrainConfig& config,
             const std::vector<TrainDomain>& train_domains, int classes,
             FilterMask low, FilterMask high)
        : cfg(config), domains(train_domains),
          h(train_domains.front().height), w(train_domains.front().width),
          c(train_domains.front().channels), num_classes(classes),
          low_mask(std::move(low)), high_mask(std::move(high)),
          states(train_domains.size()) {
        const std::size_t per_image =
            static_cast<std::size_t>(domains.front().input_dim);
        std::vector<double> split(per_image);
        for (std::size_t d = 0; d < domains.size(); ++d) {
            const TrainDomain& dom = domains[d];
            SpectraCache& cache = states[d].spectra;
            cache.per_image = per_image;
            cache.re.resize(dom.count * per_image);
            cache.im.resize(dom.count * per_image);
            states[d].high_images.resize(dom.count * per_image);
            states[d].low_images.resize(dom.count * per_image);
            for (std::size_t i = 0; i < dom.count; ++i) {
                const ImageTensor img =
                    image_from_f32(dom.images + i * per_image, h, w, c);
                const SpectrumGrid spec = spectral::dft2(img);
                for (std::size_t j = 0; j < per_image; ++j) {
                    cache.re[i * per_image + j] =
                        static_cast<float>(spec.re[j]);
                    cache.im[i * per_image + j] =
                        static_cast<float>(spec.im[j]);
                }
                // The frequency split never changes across epochs; only
                // the encoder does.
                const std::size_t at = i * per_image;
                spectral::masked_inverse_f32(cache.re.data() + at,
                                             cache.im.data() + at, h, w, c,
                                             high_mask, split.data());
                for (std::size_t j = 0; j < per_image; ++j)
                    states[d].high_images[at + j] =
                        static_cast<float>(split[j]);
                spectral::masked_inverse_f32(cache.re.data() + at,
                                             cache.im.data() + at, h, w, c,
                                             low_mask, split.data());
                for (std::size_t j = 0; j < per_image; ++j)
                    states[d].low_images[at + j] =
                        static_cast<float>(split[j]);
            }
            states[d].weight.assign(dom.count, 1.0);
        }
    }

    void refresh(const ModelParams& params, int epoch) {
        case_study.clear();
        std::vector<propensity::FeatureSet> c_sets(domains.size());
        std::vector<propensity::FeatureSet> s_sets(domains.size());
        for (std::size_t d = 0; d < domains.size(); ++d) {
            const TrainDomain& dom = domains[d];
            auto& cs = c_sets[d];
            auto& ss = s_sets[d];
            cs.dim = ss.dim = cfg.hidden_dim;
            cs.origin = propensity::FeatureOrigin::invariant;
            ss.origin = propensity::FeatureOrigin::spurious;
            cs.vectors.resize(dom.count *
                              static_cast<std::size_t>(cfg.hidden_dim));
            ss.vectors.resize(cs.vectors.size());
            const std::size_t dim = static_cast<std::size_t>(dom.input_dim);
            const std::size_t hid = static_cast<std::size_t>(cfg.hidden_dim);
            constexpr std::size_t kChunk = 32;
            std::vector<double> buf_h(kChunk * dim), buf_l(kChunk * dim);
            std::vector<const double*> ptr_h(kChunk), ptr_l(kChunk);
            const DomainState& st = states[d];
            for (std::size_t i0 = 0; i0 < dom.count; i0 += kChunk) {
                const std::size_t count = std::min(kChunk, dom.count - i0);
                for (std::size_t i = 0; i < count; ++i) {
                    const float* hsrc =
                        st.high_images.data() + (i0 + i) * dim;
                    const float* lsrc = st.low_images.data() + (i0 + i) * dim;
                    double* hdst = buf_h.data() + i * dim;
                    double* ldst = buf_l.data() + i * dim;
                    for (std::size_t j = 0; j < dim; ++j) {
                        hdst[j] = hsrc[j];
                        ldst[j] = lsrc[j];
                    }
                    ptr_h[i] = hdst;
                    ptr_l[i] = ldst;
                }
                hidden_forward_batch(params, ptr_h.data(), count,
                                     cs.vectors.data() + i0 * hid);
                hidden_forward_batch(params, ptr_l.data(), count,
                                     ss.vectors.data() + i0 * hid);
            }
        }
        auto cluster_and_weigh = [&](propensity::FeatureSet& cf,
                                     propensity::FeatureSet& sf,
                                     std::uint64_t salt) {
            const std::uint64_t kc =
                rng::derive(cfg.seed, "kmeans-c", salt).next();
            const std::uint64_t ks =
                rng::derive(cfg.seed, "kmeans-s", salt).next();
            propensity::Clustering cc =
                propensity::kmeans(cf, num_classes, kc, cfg.kmeans_iters);
            propensity::Clustering sc = propensity::kmeans(
                sf, cfg.spurious_clusters, ks, cfg.kmeans_iters);
            propensity::PropensityTable table =
                propensity::build_table(cc, sc, cfg.floor);
            return std::make_tuple(std::move(cc), std::move(sc),
                                   std::move(table));
        };
        if (cfg.pool_propensity) {
            propensity::FeatureSet call, sall;
            call.dim = sall.dim = cfg.hidden_dim;
            for (std::size_t d = 0; d < domains.size(); ++d) {
                call.vectors.insert(call.vectors.end(),
                                    c_sets[d].vectors.begin(),
                                    c_sets[d].vectors.end());
                sall.vectors.insert(sall.vectors.end(),
                                    s_sets[d].vectors.begin(),
                                    s_sets[d].vectors.end());
            }
            auto [cc, sc, table] = cluster_and_weigh(
                call, sall, static_cast<std::uint64_t>(epoch));
            std::size_t at = 0;
            for (std::size_t d = 0; d < domains.size(); ++d) {
                for (std::size_t i = 0; i < domains[d].count; ++i, ++at) {
                    const double pi =
                        propensity::sample_propensity(table, cc, sc, at);
                    states[d].weight[i] = 1.0 / pi;
                    case_study.push_back({static_cast<int>(i),
                                          domains[d].name,
                                          cc.assignments[at],
                                          sc.assignments[at], pi});
                }
                states[d].c_cluster = cc;
                states[d].s_cluster = sc;
                states[d].table = table;
            }
        } else {
            for (std::size_t d = 0; d < domains.size(); ++d) {
                auto [cc, sc, table] = cluster_and_weigh(
                    c_sets[d], s_sets[d],
                    static_cast<std::uint64_t>(epoch) * 1000 + d);
                for (std::size_t i = 0; i < domains[d].count; ++i) {
                    const double pi =
                        propensity::sample_propensity(table, cc, sc, i);
                    states[d].weight[i] = 1.0 / pi;
                    case_study.push_back({static_cast<int>(i),
                                          domains[d].name,
                                          cc.assignments[i],
                                          sc.assignments[i], pi});
                }
                states[d].c_cluster = std::move(cc);
                states[d].s_cluster = std::move(sc);
                states[d].table = std::move(table);
            }
        }
    }
};

std::pair<FilterMask, FilterMask> masks_for(const TrainConfig& cfg, int h,
                                            int w) {
    const int filter_size = cfg.filter_size > 0 ? cfg.filter_size : h / 4;
    const spectral::MaskShape shape = cfg.square_masks
                                          ? spectral::MaskShape::square
                                          : spectral::MaskShape::band;
    FilterMask low = spectral::make_low_mask(h, w, filter_size, shape);
    FilterMask high =
        cfg.complement_masks
            ? spectral::complement(low)
            : spectral::make_high_mask(h, w, filter_size, shape);
    return {std::move(low), std::move(high)};
}

int infer_classes(const std::vector<TrainDomain>& domains) {
    int num_classes = 2;
    for (const auto& d : domains)
        for (std::size_t i = 0; i < d.count; ++i)
            num_classes = std::max(num_classes, d.labels[i] + 1);
    return num_classes;
}

} // namespace

namespace {

struct DomainEval {
    double accuracy = 0.0;
    double accuracy_clean = 0.0;
    double base_loss = 0.0;
};

// One chunked forward pass per domain covering accuracy (noisy and clean)
// and the mean clamped cross-entropy.
DomainEval evaluate_domain(const ModelParams& p, const TrainDomain& d,
                           const LossConfig& cfg) {
    DomainEval out;
    if (d.count == 0) return out;
    const double bound = clamp_bound(cfg.omega, p.num_classes);
    const std::size_t dim = static_cast<std::size_t>(d.input_dim);
    const std::size_t hid = static_cast<std::size_t>(p.hidden_dim);
    constexpr std::size_t kChunk = 256;
    std::vector<double> inputs(kChunk * dim), hidden(kChunk * hid);
    std::vector<const double*> ptrs(kChunk);
    std::vector<double> clamped(p.num_classes);
    std::size_t hits = 0, hits_clean = 0;
    double loss_sum = 0.0;
    for (std::size_t i0 = 0; i0 < d.count; i0 += kChunk) {
        const std::size_t count = std::min(kChunk, d.count - i0);
        for (std::size_t i = 0; i < count; ++i) {
            const float* src = d.images + (i0 + i) * dim;
            double* dst = inputs.data() + i * dim;
            for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j];
            ptrs[i] = dst;
        }
        hidden_forward_batch(p, ptrs.data(), count, hidden.data());
        for (std::size_t i = 0; i < count; ++i) {
            const double* h = hidden.data() + i * hid;
            int best = 0;
            double best_z = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < p.num_classes; ++k) {
                const double z =
                    kernels::dot(p.w2.data() +
                                     static_cast<std::size_t>(k) * hid,
                                 h, hid) +
                    p.b2[k];
                clamped[k] = std::clamp(z, -bound, bound);
                if (z > best_z) {
                    best_z = z;
                    best = k;
                }
            }
            loss_sum += cross_entropy(clamped, d.labels[i0 + i], nullptr);
            hits += best == d.labels[i0 + i];
            const std::uint8_t clean = d.clean_labels
                                           ? d.clean_labels[i0 + i]
                                           : d.labels[i0 + i];
            hits_clean += best == clean;
        }
    }
    out.accuracy = static_cast<double>(hits) / d.count;
    out.accuracy_clean = static_cast<double>(hits_clean) / d.count;
    out.base_loss = loss_sum / static_cast<double>(d.count);
    return out;
}

} // namespace

double evaluate_accuracy(const ModelParams& p, const TrainDomain& d,
                         bool clean_labels) {
    const DomainEval e = evaluate_domain(p, d, LossConfig{});
    return clean_labels ? e.accuracy_clean : e.accuracy;
}

TrainResult train(const TrainConfig& cfg,
                  const std::vector<TrainDomain>& train_domains,
                  const std::vector<TrainDomain>& test_domains) {
    if (train_domains.empty())
        fail(ErrorCode::config_invalid, "need at least one training domain");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.step <= 0.0)
        fail(ErrorCode::config_invalid, "bad epochs/batch/step");
    if (cfg.refresh_period < 1)
        fail(ErrorCode::config_invalid, "refresh period must be >= 1");

    const TrainDomain& first = train_domains.front();
    const int input_dim = first.input_dim;
    const int h = first.height, w = first.width, c = first.channels;
    for (const auto& d : train_domains)
        if (d.input_dim != input_dim || d.height != h || d.width != w ||
            d.channels != c)
            fail(ErrorCode::shape_mismatch, "domain shapes differ");
    const int num_classes = infer_classes(train_domains);

    auto [low_mask, high_mask] = masks_for(cfg, h, w);

    rng::Rng init_rng = rng::derive(cfg.seed, "init");
    ModelParams params =
        ModelParams::init(input_dim, cfg.hidden_dim, num_classes, init_rng);
    const LossConfig loss_cfg{cfg.omega};

    const bool needs_pipeline = cfg.alpha != 0.0 || cfg.beta != 0.0;
    const std::size_t per_image = static_cast<std::size_t>(input_dim);

    std::unique_ptr<Pipeline> pipeline;
    if (needs_pipeline)
        pipeline = std::make_unique<Pipeline>(cfg, train_domains, num_classes,
                                              low_mask, high_mask);

    // Global sample index across train domains.
    std::vector<std::pair<int, int>> order;
    for (std::size_t d = 0; d < train_domains.size(); ++d)
        for (std::size_t i = 0; i < train_domains[d].count; ++i)
            order.emplace_back(static_cast<int>(d), static_cast<int>(i));
    if (order.empty()) fail(ErrorCode::config_invalid, "no training samples");

    TrainResult result;

    std::vector<double> batch_inputs, twin_inputs;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (pipeline && epoch % cfg.refresh_period == 0) {
            pipeline->refresh(params, epoch);
            result.case_study = pipeline->case_study;
        }

        // Deterministic shuffle.
        rng::Rng shuffle_rng =
            rng::derive(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        rng::Rng pair_rng =
            rng::derive(cfg.seed, "pairing", static_cast<std::uint64_t>(epoch));

        double base_sum = 0.0, psw_sum = 0.0, ps_sum = 0.0, total_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + cfg.batch_size);
            const std::size_t bsz = stop - start;
            Batch batch;
            batch.input_dim = input_dim;
            batch_inputs.resize(bsz * per_image);
            if (cfg.beta != 0.0) twin_inputs.resize(bsz * per_image);
            for (std::size_t b = 0; b < bsz; ++b) {
                const auto [d, i] = order[start + b];
                const TrainDomain& dom = train_domains[d];
                const float* src = dom.images + static_cast<std::size_t>(i) *
                                                    per_image;
                double* dst = batch_inputs.data() + b * per_image;
                for (std::size_t j = 0; j < per_image; ++j) dst[j] = src[j];
                batch.inputs.push_back(dst);
                batch.labels.push_back(dom.labels[i]);
                if (cfg.alpha != 0.0)
                    batch.weights.push_back(pipeline->states[d].weight[i]);
                if (cfg.beta != 0.0) {
                    // Partner drawn from any training domain; lambda from
                    // the same stream.
                    const auto [pd, pi] =
                        order[pair_rng.below(order.size())];
                    const double lambda =
                        spectral::sample_lambda(cfg.delta, pair_rng);
                    const SpectraCache& ci = pipeline->states[d].spectra;
                    const SpectraCache& cj = pipeline->states[pd].spectra;
                    const std::size_t ai =
                        static_cast<std::size_t>(i) * ci.per_image;
                    const std::size_t aj =
                        static_cast<std::size_t>(pi) * cj.per_image;
                    double* tdst = twin_inputs.data() + b * per_image;
                    spectral::mixed_inverse_f32(
                        ci.re.data() + ai, ci.im.data() + ai,
                        cj.re.data() + aj, cj.im.data() + aj, lambda,
                        low_mask, high_mask, h, w, c, tdst);
                    batch.twins.push_back(tdst);
                }
            }
            if (cfg.self_normalize && !batch.weights.empty()) {
                double mean = 0.0;
                for (double wv : batch.weights) mean += wv;
                mean /= static_cast<double>(batch.weights.size());
                for (double& wv : batch.weights) wv /= mean;
            }

            GradAccum acc(params);
            const LossReport r =
                evaluate_batch(params, batch, cfg.alpha, cfg.beta, loss_cfg,
                               &acc, cfg.freeze_head_for_ps);
            if (!std::isfinite(r.total))
                fail(ErrorCode::non_finite_loss,
                     "non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(start / cfg.batch_size));
            kernels::axpy(-cfg.step, acc.g.w1.data(), params.w1.data(),
                          params.w1.size());
            kernels::axpy(-cfg.step, acc.g.b1.data(), params.b1.data(),
                          params.b1.size());
            kernels::axpy(-cfg.step, acc.g.w2.data(), params.w2.data(),
                          params.w2.size());
            kernels::axpy(-cfg.step, acc.g.b2.data(), params.b2.data(),
                          params.b2.size());
            base_sum += r.base * bsz;
            psw_sum += r.psw * bsz;
            ps_sum += r.ps * bsz;
            total_sum += r.total * bsz;
            seen += bsz;
        }

        const double inv = seen ? 1.0 / static_cast<double>(seen) : 0.0;
        auto emit = [&](const TrainDomain& dom, const std::string& split) {
            const DomainEval ev = evaluate_domain(params, dom, loss_cfg);
            MetricsRow row;
            row.epoch = epoch;
            row.domain = dom.name;
            row.split = split;
            row.accuracy = ev.accuracy;
            row.accuracy_clean = ev.accuracy_clean;
            row.base = ev.base_loss;
            if (split == "train") {
                row.psw = psw_sum * inv;
                row.ps = ps_sum * inv;
                row.total = total_sum * inv;
            } else {
                row.total = row.base;
            }
            result.history.push_back(std::move(row));
        };
        for (const auto& dom : train_domains) emit(dom, "train");
        for (const auto& dom : test_domains) emit(dom, "test");
    }

    result.params = std::move(params);
    return result;
}

std::vector<CaseStudyRow> propensity_case_study(
    const TrainConfig& cfg, const std::vector<TrainDomain>& domains,
    const ModelParams& params) {
    if (domains.empty())
        fail(ErrorCode::config_invalid, "need at least one domain");
    auto [low_mask, high_mask] =
        masks_for(cfg, domains.front().height, domains.front().width);
    Pipeline pipeline(cfg, domains, infer_classes(domains), low_mask,
                      high_mask);
    pipeline.refresh(params, 0);
    return pipeline.case_study;
}

// --- checkpoints -----------------------------------------------------------

namespace {
constexpr char kCheckpointMagic[8] = {'C', 'P', 'S', 'W', 'N', 'E', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(ErrorCode::truncated_file, "checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}
} // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::file_not_found, "cannot write " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(out, static_cast<std::uint32_t>(p.input_dim));
    write_u32(out, static_cast<std::uint32_t>(p.hidden_dim));
    write_u32(out, static_cast<std::uint32_t>(p.num_classes));
    auto dump = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    dump(p.w1);
    dump(p.b1);
    dump(p.w2);
    dump(p.b2);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::file_not_found, "cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        fail(ErrorCode::bad_magic, "not a checkpoint file: " + path);
    ModelParams p;
    p.input_dim = static_cast<int>(read_u32(in));
    p.hidden_dim = static_cast<int>(read_u32(in));
    p.num_classes = static_cast<int>(read_u32(in));
    auto slurp = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) fail(ErrorCode::truncated_file, "checkpoint truncated");
    };
    slurp(p.w1, static_cast<std::size_t>(p.hidden_dim) * p.input_dim);
    slurp(p.b1, static_cast<std::size_t>(p.hidden_dim));
    slurp(p.w2, static_cast<std::size_t>(p.num_classes) * p.hidden_dim);
    slurp(p.b2, static_cast<std::size_t>(p.num_classes));
    return p;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::file_not_found, "cannot write " + path);
    out << "epoch,domain,split,accuracy,base,psw,ps,total,accuracy_clean\n";
    out.precision(12);
    for (const auto& r : rows)
        out << r.epoch << ',' << r.domain << ',' << r.split << ','
            << r.accuracy << ',' << r.base << ',' << r.psw << ',' << r.ps
            << ',' << r.total << ',' << r.accuracy_clean << "\n";
}

} // namespace cpsw::learner
