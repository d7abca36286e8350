#include "stabsel/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "stabsel/csv.hpp"

namespace stabsel {

std::string_view to_string(PriorSource s) {
  switch (s) {
    case PriorSource::NonInformative: return "non_informative";
    case PriorSource::Elicited: return "elicited";
    case PriorSource::Explicit: return "explicit";
  }
  return "unknown";
}

PriorSpec PriorSpec::from_shapes(double alpha, double beta) {
  if (!(alpha >= 1.0) || !(beta >= 1.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("prior shapes must both be >= 1");
  }
  PriorSpec p;
  p.alpha = alpha;
  p.beta = beta;
  p.source = PriorSource::Explicit;
  return p;
}

double floor_tolerant(double v) { return std::floor(v + 1e-9 * std::max(1.0, std::abs(v))); }

PriorSpec elicit(double zeta, double xi, std::size_t b) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("zeta must be in [0, 0.5]");
  if (zeta > 0.5) {
    throw std::invalid_argument("zeta must not exceed 0.5: prior may not outweigh data");
  }
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi must be in [0, 1]");
  if (b < 4) throw std::invalid_argument("elicitation needs B >= 4");

  PriorSpec p;
  if (zeta == 0.0) return p;
  const double gamma = floor_tolerant(zeta * static_cast<double>(b) / (1.0 - zeta));
  if (gamma < 2.0) {
    p.note = "gamma " + csv::format_double(gamma) + " < 2; using the flat prior";
    return p;
  }
  double alpha = floor_tolerant(xi * gamma);
  const double clamped = std::clamp(alpha, 1.0, gamma - 1.0);
  if (clamped != alpha) {
    p.note = "alpha clamped from " + csv::format_double(alpha) + " to " + csv::format_double(clamped);
    alpha = clamped;
  }
  p.alpha = alpha;
  p.beta = gamma - alpha;
  p.source = PriorSource::Elicited;
  p.zeta = zeta;
  p.xi = xi;
  return p;
}

BetaParams update(BetaParams prior, std::size_t n, std::size_t b) {
  if (n > b) throw std::invalid_argument("selection count exceeds number of subsamples");
  return {prior.alpha + static_cast<double>(n), prior.beta + static_cast<double>(b - n)};
}

double beta_mean(double a, double b) { return a / (a + b); }

double beta_variance(double a, double b) {
  const double s = a + b;
  return a * b / (s * s * (s + 1.0));
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// lgamma(x) minus its leading Stirling terms (x - 1/2) ln x - x + ln(2 pi)/2.
double stirling_remainder(double x) {
  if (x >= 15.0) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
  }
  return std::lgamma(x) - ((x - 0.5) * std::log(x) - x + kHalfLog2Pi);
}

// log of x^a (1-x)^b / B(a, b), arranged so the large terms cancel
// analytically: a ln(x (a+b) / a) is evaluated as a log1p of a small number
// near the mode.
double log_power_terms(double x, double a, double b) {
  const double s = a + b;
  const double y = 1.0 - x;
  const double u = (x * b - y * a) / a;   // x s / a - 1
  const double v = (y * a - x * b) / b;   // y s / b - 1
  return a * std::log1p(u) + b * std::log1p(v) + 0.5 * std::log(a * b / s) - kHalfLog2Pi -
         stirling_remainder(a) - stirling_remainder(b) + stirling_remainder(s);
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_cf(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("reg_inc_beta: shapes must be positive");
  if (std::isnan(x)) throw std::invalid_argument("reg_inc_beta: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_power_terms(x, a, b)) * beta_cf(x, a, b) / a;
  }
  return 1.0 - std::exp(log_power_terms(1.0 - x, b, a)) * beta_cf(1.0 - x, b, a) / b;
}

double beta_quantile(double prob, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta_quantile: shapes must be positive");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("beta_quantile: probability outside [0, 1]");
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double x = beta_mean(a, b);
  for (int it = 0; it < 80; ++it) {
    if (reg_inc_beta(x, a, b) < prob) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo < 1e-10) break;
    x = 0.5 * (lo + hi);
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> credible_interval(double alpha_post, double beta_post, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must be in (0, 1)");
  const double tail = 0.5 * (1.0 - level);
  return {beta_quantile(tail, alpha_post, beta_post), beta_quantile(1.0 - tail, alpha_post, beta_post)};
}

PosteriorSummary posterior(const PriorSpec& prior, std::size_t n, std::size_t b, double level,
                           std::optional<double> pi_thr) {
  const BetaParams post = update({prior.alpha, prior.beta}, n, b);
  PosteriorSummary s;
  s.n = n;
  s.b = b;
  s.alpha_post = post.alpha;
  s.beta_post = post.beta;
  s.mean = beta_mean(post.alpha, post.beta);
  s.variance = beta_variance(post.alpha, post.beta);
  std::tie(s.ci_low, s.ci_high) = credible_interval(post.alpha, post.beta, level);
  s.ci_level = level;
  s.selected = pi_thr.has_value() && s.mean >= *pi_thr;
  return s;
}

// ---------------------------------------------------------------------------

std::vector<double> alpha_range(std::size_t gamma) {
  std::vector<double> out;
  for (std::size_t a = 1; a + 1 <= gamma; ++a) out.push_back(static_cast<double>(a));
  return out;
}

VarianceSurface variance_surface(std::size_t b, std::span<const std::size_t> n_values,
                                 std::span<const double> alpha_values, std::size_t gamma) {
  if (gamma < 2) throw std::invalid_argument("variance surface: gamma must be at least 2");
  VarianceSurface vs;
  vs.b = b;
  vs.gamma = gamma;
  vs.n_values.assign(n_values.begin(), n_values.end());
  vs.alpha_values.assign(alpha_values.begin(), alpha_values.end());
  const double g = static_cast<double>(gamma);
  for (double a : vs.alpha_values) {
    if (!(a >= 1.0 && a <= g - 1.0)) {
      throw std::invalid_argument("variance surface: alpha " + csv::format_double(a) + " outside [1, gamma - 1]");
    }
  }
  for (std::size_t n : vs.n_values) {
    if (n > b) throw std::invalid_argument("variance surface: n exceeds B");
    const double nn = static_cast<double>(n);
    const double rest = static_cast<double>(b - n);
    vs.baseline.push_back(beta_variance(1.0 + nn, 1.0 + rest));
    for (double a : vs.alpha_values) vs.informative.push_back(beta_variance(a + nn, g - a + rest));
  }
  return vs;
}

double max_variance_alpha(std::size_t b, std::size_t n, std::size_t gamma) {
  if (n > b) throw std::invalid_argument("max_variance_alpha: n exceeds B");
  if (gamma < 2) throw std::invalid_argument("max_variance_alpha: gamma must be at least 2");
  const double peak = 0.5 * static_cast<double>(gamma + b) - static_cast<double>(n);
  return std::clamp(peak, 1.0, static_cast<double>(gamma) - 1.0);
}

// ---------------------------------------------------------------------------

std::vector<VariableReport> decision_report(std::span<const std::size_t> counts, std::size_t b,
                                            std::span<const std::string> names,
                                            std::span<const PriorSpec> priors, double pi_thr, double level) {
  if (priors.size() != counts.size()) {
    throw std::invalid_argument("decision report: " + std::to_string(priors.size()) + " priors for " +
                                std::to_string(counts.size()) + " variables");
  }
  if (names.size() != counts.size()) throw std::invalid_argument("decision report: names/counts mismatch");
  if (!(pi_thr > 0.0 && pi_thr < 1.0)) throw std::invalid_argument("pi_thr must be in (0, 1)");
  std::vector<VariableReport> out(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const PriorSpec& pr = priors[j];
    if (pr.source == PriorSource::Elicited && pr.gamma() > static_cast<double>(b)) {
      throw std::invalid_argument("prior for '" + names[j] + "' has gamma " + csv::format_double(pr.gamma()) +
                                  " > B = " + std::to_string(b));
    }
    VariableReport& r = out[j];
    r.index = j;
    r.name = names[j];
    r.prior = pr;
    r.post = posterior(pr, counts[j], b, level, pi_thr);
    r.frequency = b ? static_cast<double>(counts[j]) / static_cast<double>(b) : 0.0;
    r.frequentist_selected = b > 0 && r.frequency >= pi_thr;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const VariableReport& l, const VariableReport& r) { return l.post.mean > r.post.mean; });
  return out;
}

std::vector<VariableReport> decision_report(const SelectionMatrix& m, std::span<const PriorSpec> priors,
                                            double pi_thr, double level) {
  const auto counts = m.counts();
  return decision_report(counts, m.rows(), m.names(), priors, pi_thr, level);
}

std::string report_to_csv(std::span<const VariableReport> report) {
  std::string out = "name,n_j,alpha,beta,mean,variance,ci_low,ci_high,selected\n";
  for (const auto& r : report) {
    out += r.name + ',' + std::to_string(r.post.n) + ',' + csv::format_double(r.prior.alpha) + ',' +
           csv::format_double(r.prior.beta) + ',' + csv::format_double(r.post.mean) + ',' +
           csv::format_double(r.post.variance) + ',' + csv::format_double(r.post.ci_low) + ',' +
           csv::format_double(r.post.ci_high) + ',' + (r.post.selected ? "1" : "0") + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PriorEntry> parse_prior_csv(std::string_view text, std::string_view source) {
  const csv::Table t = csv::parse(text, source);
  const auto name_col = t.column("name");
  if (name_col < 0) throw ParseError(std::string(source) + ": prior file needs a 'name' column");
  const auto zc = t.column("zeta"), xc = t.column("xi"), ac = t.column("alpha"), bc = t.column("beta");
  if ((zc < 0) != (xc < 0) || (ac < 0) != (bc < 0) || (zc < 0 && ac < 0)) {
    throw ParseError(std::string(source) + ": prior file needs zeta,xi and/or alpha,beta column pairs");
  }
  auto cell = [&](std::size_t r, std::ptrdiff_t c) -> std::string_view {
    return c < 0 ? std::string_view{} : std::string_view(t.rows[r][static_cast<std::size_t>(c)]);
  };
  auto number = [&](std::size_t r, std::ptrdiff_t c) {
    double v = 0.0;
    if (!csv::try_parse_double(cell(r, c), v)) {
      throw ParseError(std::string(source) + ": line " + std::to_string(t.line_numbers[r]) + ": bad number '" +
                       std::string(cell(r, c)) + "' in column '" + t.header[static_cast<std::size_t>(c)] + "'");
    }
    return v;
  };
  std::vector<PriorEntry> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    PriorEntry e;
    e.name = std::string(cell(r, name_col));
    const bool has_elicited = !cell(r, zc).empty() || !cell(r, xc).empty();
    const bool has_shapes = !cell(r, ac).empty() || !cell(r, bc).empty();
    if (has_elicited == has_shapes) {
      throw ParseError(std::string(source) + ": line " + std::to_string(t.line_numbers[r]) +
                       ": give either zeta,xi or alpha,beta");
    }
    if (has_elicited) {
      e.elicited = std::pair{number(r, zc), number(r, xc)};
    } else {
      e.shapes = std::pair{number(r, ac), number(r, bc)};
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<PriorEntry> read_prior_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("prior file not found: " + path.string());
  return parse_prior_csv(csv::read_text(path), path.string());
}

std::string priors_to_csv(std::span<const PriorEntry> entries) {
  std::string out = "name,zeta,xi,alpha,beta\n";
  for (const auto& e : entries) {
    out += e.name;
    if (e.elicited) {
      out += ',' + csv::format_double(e.elicited->first) + ',' + csv::format_double(e.elicited->second) + ",,\n";
    } else if (e.shapes) {
      out += ",,," + csv::format_double(e.shapes->first) + ',' + csv::format_double(e.shapes->second) + '\n';
    } else {
      out += ",,,,\n";
    }
  }
  return out;
}

std::vector<PriorSpec> resolve_priors(std::span<const PriorEntry> entries, std::span<const std::string> names,
                                      std::size_t b) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t j = 0; j < names.size(); ++j) index.emplace(names[j], j);
  std::vector<PriorSpec> out(names.size());
  std::unordered_set<std::string_view> seen;
  for (const auto& e : entries) {
    const auto it = index.find(e.name);
    if (it == index.end()) throw std::invalid_argument("prior for unknown variable '" + e.name + "'");
    if (!seen.insert(e.name).second) throw std::invalid_argument("duplicate prior for variable '" + e.name + "'");
    if (e.elicited && e.shapes) throw std::invalid_argument("prior for '" + e.name + "' gives both pathways");
    if (e.elicited) {
      out[it->second] = elicit(e.elicited->first, e.elicited->second, b);
    } else if (e.shapes) {
      out[it->second] = PriorSpec::from_shapes(e.shapes->first, e.shapes->second);
    }
  }
  return out;
}

}  // namespace stabsel
