#include "ssw/adaptive.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace ssw {

namespace {

using Points = std::vector<std::vector<double>>;

double rbf(const std::vector<double>& a, const std::vector<double>& b, double g) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a[j] - b[j];
        d2 += d * d;
    }
    return std::exp(-g * d2);
}

// core SMO fit on already-normalized coordinates, y in {-1,+1}
struct SmoResult {
    std::vector<double> alpha;
    double bias = 0.0;
};

SmoResult smo_fit(const Points& x, const std::vector<double>& y, double c,
                  double g, double tol = 1e-4, int max_iter = 2000) {
    const int n = static_cast<int>(y.size());
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) k[i][j] = k[j][i] = rbf(x[i], x[j], g);

    std::vector<double> a(n, 0.0);
    double b = 0.0;
    auto f_at = [&](int i) {
        double s = b;
        for (int t = 0; t < n; ++t) s += a[t] * y[t] * k[t][i];
        return s;
    };
    int passes = 0, it = 0;
    while (passes < 5 && it < max_iter) {
        int changed = 0;
        for (int i = 0; i < n; ++i) {
            double ei = f_at(i) - y[i];
            if (!((y[i] * ei < -tol && a[i] < c) || (y[i] * ei > tol && a[i] > 0)))
                continue;
            int j = (i + 1 + it) % n;
            if (j == i) continue;
            double ej = f_at(j) - y[j];
            double ai_old = a[i], aj_old = a[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(c, c + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - c);
                hi = std::min(c, ai_old + aj_old);
            }
            if (lo >= hi) continue;
            double eta = 2.0 * k[i][j] - k[i][i] - k[j][j];
            if (eta >= 0) continue;
            double aj = std::clamp(aj_old - y[j] * (ei - ej) / eta, lo, hi);
            if (std::abs(aj - aj_old) < 1e-7) continue;
            double ai = ai_old + y[i] * y[j] * (aj_old - aj);
            a[i] = ai;
            a[j] = aj;
            double b1 = b - ei - y[i] * (ai - ai_old) * k[i][i] -
                        y[j] * (aj - aj_old) * k[i][j];
            double b2 = b - ej - y[i] * (ai - ai_old) * k[i][j] -
                        y[j] * (aj - aj_old) * k[j][j];
            if (ai > 0 && ai < c) b = b1;
            else if (aj > 0 && aj < c) b = b2;
            else b = 0.5 * (b1 + b2);
            ++changed;
        }
        ++it;
        passes = changed == 0 ? passes + 1 : 0;
    }
    return {std::move(a), b};
}

double smo_decision(const Points& sv, const std::vector<double>& alpha_y,
                    double bias, double g, const std::vector<double>& q) {
    double s = bias;
    for (std::size_t t = 0; t < sv.size(); ++t) s += alpha_y[t] * rbf(sv[t], q, g);
    return s;
}

// Lin-Weng-Platt Newton fit of sigma(a f + b) to binary targets
std::pair<double, double> platt_fit(const std::vector<double>& f,
                                    const std::vector<double>& y01,
                                    int max_iter = 100) {
    const std::size_t n = f.size();
    double prior1 = std::accumulate(y01.begin(), y01.end(), 0.0);
    double prior0 = static_cast<double>(n) - prior1;
    double t_hi = (prior1 + 1.0) / (prior1 + 2.0);
    double t_lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y01[i] > 0.5 ? t_hi : t_lo;

    double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto obj = [&](double aa, double bb) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = aa * f[i] + bb;
            s += z >= 0 ? t[i] * z + std::log1p(std::exp(-z))
                        : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return s;
    };
    double fval = obj(a, b);
    for (int iter = 0; iter < max_iter; ++iter) {
        double g1 = 0, g2 = 0, h11 = 1e-12, h22 = 1e-12, h12 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = a * f[i] + b;
            double p = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z))
                              : 1.0 / (1.0 + std::exp(z));
            double d1 = t[i] - p, d2 = p * (1.0 - p);
            g1 += f[i] * d1;
            g2 += d1;
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h12 += f[i] * d2;
        }
        double det = h11 * h22 - h12 * h12;
        double da = -(h22 * g1 - h12 * g2) / det;
        double db = -(-h12 * g1 + h11 * g2) / det;
        for (double step = 1.0; step > 1e-10; step /= 2.0) {
            double an = a + step * da, bn = b + step * db;
            double fn = obj(an, bn);
            if (fn < fval - 1e-12) {
                a = an;
                b = bn;
                fval = fn;
                break;
            }
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    }
    return {a, b};
}

Points normalize(const Points& r, const std::vector<double>& lo,
                 const std::vector<double>& hi) {
    Points x = r;
    for (auto& row : x)
        for (std::size_t j = 0; j < lo.size(); ++j)
            row[j] = (row[j] - lo[j]) / (hi[j] - lo[j]);
    return x;
}

bool two_classes(const std::vector<double>& y) {
    bool pos = false, neg = false;
    for (double v : y) (v > 0 ? pos : neg) = true;
    return pos && neg;
}

double auto_gamma(const Points& x, const std::vector<double>& y, double c) {
    const int n = static_cast<int>(y.size());
    double base = 1.0 / static_cast<double>(x[0].size());
    double best_g = base;
    int best_correct = -1;
    for (double mult : {1.0, 4.0, 16.0, 64.0}) {
        double g = base * mult;
        int correct = 0;
        for (int k = 0; k < 5; ++k) {
            Points xtr;
            std::vector<double> ytr;
            for (int i = 0; i < n; ++i)
                if (i % 5 != k) {
                    xtr.push_back(x[i]);
                    ytr.push_back(y[i]);
                }
            if (!two_classes(ytr)) continue;
            SmoResult fit = smo_fit(xtr, ytr, c, g);
            std::vector<double> ay(ytr.size());
            for (std::size_t t = 0; t < ytr.size(); ++t) ay[t] = fit.alpha[t] * ytr[t];
            for (int i = 0; i < n; ++i)
                if (i % 5 == k) {
                    double f = smo_decision(xtr, ay, fit.bias, g, x[i]);
                    if ((f >= 0) == (y[i] > 0)) ++correct;
                }
        }
        if (correct > best_correct) {
            best_correct = correct;
            best_g = g;
        }
    }
    return best_g;
}

}  // namespace

double SvmModel::decision(const std::vector<double>& rho) const {
    std::vector<double> q(rho.size());
    for (std::size_t j = 0; j < rho.size(); ++j)
        q[j] = (rho[j] - lo[j]) / (hi[j] - lo[j]);
    return smo_decision(sv, alpha_y, bias, gamma, q);
}

double predict_probability(const SvmModel& model, const std::vector<double>& rho) {
    double z = model.platt_a * model.decision(rho) + model.platt_b;
    // the LWP fit targets P(unstable); P(stable) = sigma(-z)
    return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

std::vector<std::vector<double>> sample_uniform(const ParameterDomain& domain,
                                                int n, std::uint64_t rng_seed) {
    domain.validate();
    if (n < 1) throw SchemaError("sample_uniform: n must be >= 1");
    Rng rng(rng_seed);
    Points out(n);
    for (auto& row : out) row = rng.uniform_vec(domain.lo, domain.hi);
    return out;
}

std::vector<LabeledSample> label_set(const std::vector<std::vector<double>>& points,
                                     const Oracle& oracle, bool refinement) {
    std::vector<LabeledSample> out(points.size());
    unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, points.size() ? points.size() : 1);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            LabeledSample& s = out[i];
            s.rho = points[i];
            s.refinement = refinement;
            try {
                StabilityVerdict v = oracle(points[i]);
                s.s = v.stable ? 1 : 0;
                s.infeasible = v.infeasible;
                s.worst_re = v.worst_re;
                s.failing_scenarios = v.failing_scenarios;
            } catch (const std::exception&) {
                s.infeasible = true;
                s.s = 0;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

SvmModel train_svm(const std::vector<LabeledSample>& samples,
                   const ParameterDomain& domain, double c, double gamma) {
    domain.validate();
    Points r;
    std::vector<double> y;
    for (const auto& s : samples) {
        if (s.infeasible) continue;  // no operating point: not a training label
        r.push_back(s.rho);
        y.push_back(s.s ? 1.0 : -1.0);
    }
    if (r.empty() || !two_classes(y))
        throw InfeasibleError("degenerate labels: need both classes to train");

    SvmModel m;
    m.lo = domain.lo;
    m.hi = domain.hi;
    m.c = c;
    Points x = normalize(r, m.lo, m.hi);
    m.gamma = gamma > 0 ? gamma : auto_gamma(x, y, c);

    SmoResult fit = smo_fit(x, y, c, m.gamma);
    m.sv = x;
    m.alpha_y.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) m.alpha_y[t] = fit.alpha[t] * y[t];
    m.bias = fit.bias;

    // Platt sigmoid on 5-fold out-of-fold decision values
    const int n = static_cast<int>(y.size());
    std::vector<double> oof(n), y01(n);
    for (int i = 0; i < n; ++i) y01[i] = y[i] > 0 ? 1.0 : 0.0;
    for (int k = 0; k < 5; ++k) {
        Points xtr;
        std::vector<double> ytr;
        for (int i = 0; i < n; ++i)
            if (i % 5 != k) {
                xtr.push_back(x[i]);
                ytr.push_back(y[i]);
            }
        if (two_classes(ytr)) {
            SmoResult sub = smo_fit(xtr, ytr, c, m.gamma);
            std::vector<double> ay(ytr.size());
            for (std::size_t t = 0; t < ytr.size(); ++t) ay[t] = sub.alpha[t] * ytr[t];
            for (int i = 0; i < n; ++i)
                if (i % 5 == k) oof[i] = smo_decision(xtr, ay, sub.bias, m.gamma, x[i]);
        } else {
            for (int i = 0; i < n; ++i)
                if (i % 5 == k) oof[i] = smo_decision(m.sv, m.alpha_y, m.bias, m.gamma, x[i]);
        }
    }
    std::tie(m.platt_a, m.platt_b) = platt_fit(oof, y01);
    return m;
}

std::vector<std::vector<double>> refine(const SvmModel& model,
                                        const ParameterDomain& domain,
                                        const AsmConfig& cfg, Rng& rng) {
    Points cand(cfg.n_r);
    for (auto& row : cand) row = rng.uniform_vec(domain.lo, domain.hi);
    std::vector<int> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i)
        score[i] = std::abs(predict_probability(model, cand[i]) - cfg.p_th);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] < score[b]; });
    Points out;
    for (int i = 0; i < std::min<int>(cfg.n_a, order.size()); ++i)
        out.push_back(cand[order[i]]);
    return out;
}

AsmHistory run_asm(const ParameterDomain& domain, const Oracle& oracle,
                   const AsmConfig& cfg) {
    cfg.validate();
    domain.validate();
    Rng rng(cfg.rng_seed);

    Points seed(cfg.n_init);
    for (auto& row : seed) row = rng.uniform_vec(domain.lo, domain.hi);
    AsmHistory hist;
    hist.samples = label_set(seed, oracle, /*refinement=*/false);
    hist.initial_model = train_svm(hist.samples, domain, cfg.c, cfg.gamma);

    Points extra = refine(hist.initial_model, domain, cfg, rng);
    auto labeled = label_set(extra, oracle, /*refinement=*/true);
    hist.samples.insert(hist.samples.end(), labeled.begin(), labeled.end());
    hist.final_model = train_svm(hist.samples, domain, cfg.c, cfg.gamma);
    return hist;
}

std::vector<double> argmax_probability(const SvmModel& model,
                                       const ParameterDomain& domain,
                                       int n_starts, std::uint64_t rng_seed) {
    domain.validate();
    Rng rng(rng_seed);
    std::vector<double> best;
    double best_p = -1.0;
    auto consider = [&](const std::vector<double>& pt) {
        double p = predict_probability(model, pt);
        if (p > best_p) {
            best_p = p;
            best = pt;
        }
    };
    std::vector<std::vector<double>> starts(n_starts);
    for (auto& s : starts) s = rng.uniform_vec(domain.lo, domain.hi);
    // keep the best few starts, then coordinate-descent each
    std::stable_sort(starts.begin(), starts.end(),
                     [&](const auto& a, const auto& b) {
                         return predict_probability(model, a) >
                                predict_probability(model, b);
                     });
    starts.resize(std::min<std::size_t>(starts.size(), 8));
    for (auto pt : starts) {
        consider(pt);
        for (int round = 0; round < 60; ++round) {
            bool improved = false;
            for (std::size_t j = 0; j < domain.dim(); ++j) {
                double span = (domain.hi[j] - domain.lo[j]) *
                              std::pow(0.5, 1 + round / static_cast<int>(domain.dim()));
                for (double dir : {-1.0, 1.0}) {
                    std::vector<double> trial = pt;
                    trial[j] = std::clamp(trial[j] + dir * span, domain.lo[j],
                                          domain.hi[j]);
                    if (predict_probability(model, trial) >
                        predict_probability(model, pt)) {
                        pt = trial;
                        improved = true;
                    }
                }
            }
            consider(pt);
            if (!improved && round > 10) break;
        }
    }
    return best;
}

}  // namespace ssw
