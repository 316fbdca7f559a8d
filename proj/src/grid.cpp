#include "tfa/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>

namespace tfa {

namespace {

// FFTW plan creation is not thread-safe; execution with fftw_execute_dft
// on distinct arrays is. Plans are cached per size.
std::mutex g_plan_mutex;

fftw_plan plan_for(std::size_t m, int sign) {
    static std::map<std::pair<std::size_t, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto key = std::make_pair(m, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<cplx> tmp(m);
    auto* ptr = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(m), ptr, ptr, sign, FFTW_ESTIMATE);
    cache.emplace(key, p);
    return p;
}

void run_dft(std::vector<cplx>& data, int sign) {
    fftw_plan p = plan_for(data.size(), sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
}

}  // namespace

void dft_forward(std::vector<cplx>& data) { run_dft(data, FFTW_FORWARD); }
void dft_inverse_unnormalized(std::vector<cplx>& data) { run_dft(data, FFTW_BACKWARD); }

GridFunction GridFunction::from_spectrum(GridSpec spec, const std::vector<cplx>& spectrum_fft_order) {
    if (spectrum_fft_order.size() != spec.M)
        throw std::invalid_argument("grid: spectrum length != M");
    std::vector<cplx> samples = spectrum_fft_order;
    dft_inverse_unnormalized(samples);
    const double inv_l = 1.0 / spec.L;
    for (auto& v : samples) v *= inv_l;
    GridFunction f(spec, std::move(samples));
    // Seed the cache so the round trip is exact by construction.
    std::call_once(f.cache_->once, [&] { f.cache_->freq = spectrum_fft_order; });
    return f;
}

const std::vector<cplx>& GridFunction::spectrum() const {
    std::call_once(cache_->once, [&] {
        std::vector<cplx> freq = samples_;
        dft_forward(freq);
        const double h = spec_.h();
        for (auto& v : freq) v *= h;
        cache_->freq = std::move(freq);
    });
    return cache_->freq;
}

std::int64_t GridFunction::band_limit(double tol) const {
    const auto& sp = spectrum();
    double peak = 0.0;
    for (const auto& v : sp) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return 0;
    const std::int64_t half = static_cast<std::int64_t>(spec_.M / 2);
    std::int64_t band = 0;
    for (std::int64_t k = -half; k < half; ++k) {
        std::int64_t idx = ((k % static_cast<std::int64_t>(spec_.M)) + spec_.M) % spec_.M;
        if (std::abs(sp[static_cast<std::size_t>(idx)]) > tol * peak)
            band = std::max(band, k < 0 ? -k : k);
    }
    return band;
}

double GridFunction::norm_l1() const {
    double s = 0.0;
    for (const auto& v : samples_) s += std::abs(v);
    return s * spec_.h();
}

double GridFunction::norm_l2() const {
    double s = 0.0;
    for (const auto& v : samples_) s += std::norm(v);
    return std::sqrt(s * spec_.h());
}

double GridFunction::norm_sup() const {
    double s = 0.0;
    for (const auto& v : samples_) s = std::max(s, std::abs(v));
    return s;
}

double torus_dist(double x, double a, double b, double L) {
    double best = 0.0;
    for (int m = -1; m <= 1; ++m) {
        double xx = x + m * L;
        double d;
        if (xx < a)
            d = a - xx;
        else if (xx > b)
            d = xx - b;
        else
            return 0.0;
        if (m == -1 || d < best) best = d;
    }
    return best;
}

double weighted_l1(const GridFunction& f, const CutoffWeight& w) {
    const auto& s = f.samples();
    const GridSpec& g = f.spec();
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += std::abs(s[j]) * w(g.x(j));
    return acc * g.h();
}

double weighted_l2(const GridFunction& f, const CutoffWeight& w) {
    const auto& s = f.samples();
    const GridSpec& g = f.spec();
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        double ww = w(g.x(j));
        acc += std::norm(s[j]) * ww * ww;
    }
    return std::sqrt(acc * g.h());
}

GridFunction hl_maximal(const GridFunction& f) {
    // For each window length l, means over all circular windows via a
    // running sum, then a sliding-window maximum over the l starts whose
    // window contains each point. O(M^2) total.
    const std::size_t m = f.size();
    const auto& s = f.samples();
    std::vector<double> absf(m);
    for (std::size_t j = 0; j < m; ++j) absf[j] = std::abs(s[j]);

    std::vector<double> best(m, 0.0);
    std::vector<double> mean(m);
    for (std::size_t len = 1; len <= m; ++len) {
        if (len == 1) {
            mean = absf;
        } else {
            for (std::size_t st = 0; st < m; ++st) mean[st] += absf[(st + len - 1) % m];
        }
        // Point j is covered by windows starting at st in [j-len+1, j]
        // (mod m). Monotone deque over the doubled start index range.
        const double inv_len = 1.0 / static_cast<double>(len);
        std::deque<std::size_t> dq;  // indices into the doubled range, decreasing mean
        auto val = [&](std::size_t t) { return mean[t % m]; };
        std::size_t lo = m + 1 - len;  // doubled-range position of start j-len+1 for j=0: m+j-len+1
        std::size_t hi = m;            // position of start j for j=0 is m
        for (std::size_t t = lo; t <= hi; ++t) {
            while (!dq.empty() && val(dq.back()) <= val(t)) dq.pop_back();
            dq.push_back(t);
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (j > 0) {
                std::size_t t = m + j;  // new start enters
                while (!dq.empty() && val(dq.back()) <= val(t)) dq.pop_back();
                dq.push_back(t);
                if (dq.front() < m + j + 1 - len) dq.pop_front();
            }
            double v = val(dq.front()) * inv_len;
            if (v > best[j]) best[j] = v;
        }
    }
    // mean[] accumulated sums, so divide happened via inv_len above.
    std::vector<cplx> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = best[j];
    return GridFunction(f.spec(), std::move(out));
}

GridFunction hl_maximal_dyadic_approx(const GridFunction& f) {
    const std::size_t m = f.size();
    const auto& s = f.samples();
    std::vector<double> sums(m);
    for (std::size_t j = 0; j < m; ++j) sums[j] = std::abs(s[j]);
    std::vector<double> best = sums;  // len-1 averages
    for (std::size_t len = 2; len <= m; len *= 2) {
        for (std::size_t base = 0; base < m; base += len) {
            double acc = 0.0;
            for (std::size_t j = base; j < base + len; ++j) acc += sums[j];
            double avg = acc / static_cast<double>(len);
            for (std::size_t j = base; j < base + len; ++j)
                if (avg > best[j]) best[j] = avg;
        }
    }
    std::vector<cplx> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = best[j];
    return GridFunction(f.spec(), std::move(out));
}

namespace {

struct CZState {
    const std::vector<cplx>* samples;
    std::vector<double> prefix_abs;   // prefix sums of |f|
    std::vector<cplx> prefix_val;     // prefix sums of f
    double h;
    double alpha;
    std::vector<std::pair<std::size_t, std::size_t>> selected;  // [begin, end) sample ranges
};

void cz_recurse(CZState& st, std::size_t begin, std::size_t end) {
    double avg = (st.prefix_abs[end] - st.prefix_abs[begin]) / static_cast<double>(end - begin);
    if (avg > st.alpha) {
        st.selected.emplace_back(begin, end);
        return;
    }
    if (end - begin == 1) return;
    std::size_t mid = begin + (end - begin) / 2;
    cz_recurse(st, begin, mid);
    cz_recurse(st, mid, end);
}

}  // namespace

CZResult cz_decompose(const GridFunction& f, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("cz: alpha must be positive");
    const std::size_t m = f.size();
    const auto& s = f.samples();
    CZState st;
    st.samples = &s;
    st.h = f.spec().h();
    st.alpha = alpha;
    st.prefix_abs.assign(m + 1, 0.0);
    st.prefix_val.assign(m + 1, cplx{});
    for (std::size_t j = 0; j < m; ++j) {
        st.prefix_abs[j + 1] = st.prefix_abs[j] + std::abs(s[j]);
        st.prefix_val[j + 1] = st.prefix_val[j] + s[j];
    }
    double root_avg = st.prefix_abs[m] / static_cast<double>(m);
    if (root_avg > alpha) throw RootAverageExceedsLevel();

    cz_recurse(st, 0, m);

    std::vector<cplx> good = s;
    CZResult out{GridFunction(f.spec(), s), {}, alpha, 0.0, 0.0};
    const double L = f.spec().L;
    const Rational lr = Rational::from_double(L, 24);  // exact for dyadic L
    for (auto [b, e] : st.selected) {
        cplx avg = (st.prefix_val[e] - st.prefix_val[b]) / static_cast<double>(e - b);
        std::vector<cplx> bad(m, cplx{});
        for (std::size_t j = b; j < e; ++j) {
            bad[j] = s[j] - avg;
            good[j] = avg;
        }
        // Exact rational endpoints: samples [b, e) cover [b*L/M, e*L/M).
        Rational lo = lr * Rational(static_cast<std::int64_t>(b), 1) / Rational(static_cast<std::int64_t>(m));
        Rational hi = lr * Rational(static_cast<std::int64_t>(e), 1) / Rational(static_cast<std::int64_t>(m));
        out.bad.emplace_back(RatInterval{lo, hi}, GridFunction(f.spec(), std::move(bad)));
        out.total_interval_length += static_cast<double>(e - b) * st.h;
    }
    out.good = GridFunction(f.spec(), std::move(good));
    double l1 = f.norm_l1();
    out.cz_constant = l1 > 0.0 ? out.total_interval_length * alpha / l1 : 0.0;
    return out;
}

void save_csv(const GridFunction& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("io: cannot open " + path);
    os << "index,re,im\n";
    char buf[96];
    for (std::size_t j = 0; j < f.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", j, f[j].real(), f[j].imag());
        os << buf;
    }
}

GridFunction load_csv(const std::string& path, double L) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("io: cannot open " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<cplx> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t idx;
        double re, im;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &idx, &re, &im) != 3)
            throw std::runtime_error("io: malformed CSV line: " + line);
        vals.emplace_back(re, im);
    }
    return GridFunction(GridSpec(L, vals.size()), std::move(vals));
}

namespace {
constexpr char kMagic[4] = {'T', 'F', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_binary(const GridFunction& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("io: cannot open " + path);
    char header[32] = {};
    std::memcpy(header, kMagic, 4);
    std::uint32_t ver = kVersion;
    std::memcpy(header + 4, &ver, 4);
    std::uint64_t m = f.size();
    std::memcpy(header + 8, &m, 8);
    double L = f.spec().L;
    std::memcpy(header + 16, &L, 8);
    os.write(header, 32);
    os.write(reinterpret_cast<const char*>(f.samples().data()),
             static_cast<std::streamsize>(f.size() * sizeof(cplx)));
}

GridFunction load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("io: cannot open " + path);
    char header[32];
    is.read(header, 32);
    if (!is || std::memcmp(header, kMagic, 4) != 0)
        throw std::runtime_error("io: bad TFGF header in " + path);
    std::uint32_t ver;
    std::memcpy(&ver, header + 4, 4);
    if (ver != kVersion) throw std::runtime_error("io: unsupported TFGF version");
    std::uint64_t m;
    std::memcpy(&m, header + 8, 8);
    double L;
    std::memcpy(&L, header + 16, 8);
    std::vector<cplx> vals(m);
    is.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(m * sizeof(cplx)));
    if (!is) throw std::runtime_error("io: truncated TFGF file");
    return GridFunction(GridSpec(L, m), std::move(vals));
}

}  // namespace tfa
