#include "mcghd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "mcghd/error.hpp"

namespace mcghd {
namespace {

int family_rank(Family family) {
  const auto* it = std::find(std::begin(kAllFamilies), std::end(kAllFamilies), family);
  return static_cast<int>(it - std::begin(kAllFamilies));
}

}  // namespace

int count_free_params(Family family, int G, int p) {
  if (G < 1 || p < 1) throw InputError("count_free_params: G and p must be positive");
  const int rotation = p * (p - 1) / 2;
  int per = 0;
  switch (family) {
    case Family::MGHD:
      per = 2 * p + p * (p + 1) / 2 + 2;
      break;
    case Family::MMSGHD:
    case Family::McMSGHD:
      per = 2 * p + rotation + p + 2 * p;
      break;
    case Family::MCGHD:
      per = 2 * p + rotation + p + 2 * p + 3;
      break;
  }
  return G * per + (G - 1);
}

double bic(double loglik, int rho, std::size_t n) {
  return 2.0 * loglik - rho * std::log(static_cast<double>(n));
}

double bic(const FitResult& fit, std::size_t n) {
  return bic(fit.loglik, count_free_params(fit.model.family, fit.model.num_components(),
                                           fit.model.dim()),
             n);
}

std::optional<std::size_t> best_score(const std::vector<ModelScore>& scores) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const ModelScore& s = scores[k];
    if (s.failed || !std::isfinite(s.bic)) continue;
    if (!best) {
      best = k;
      continue;
    }
    const ModelScore& b = scores[*best];
    if (s.bic > b.bic ||
        (s.bic == b.bic && std::make_tuple(s.G, family_rank(s.family)) <
                               std::make_tuple(b.G, family_rank(b.family)))) {
      best = k;
    }
  }
  return best;
}

SelectionResult select(const Eigen::MatrixXd& data, const std::vector<int>& G_range,
                       const std::vector<Family>& families, const FitConfig& base) {
  if (G_range.empty() || families.empty()) {
    throw InputError("select: component range and family set must be nonempty");
  }
  std::vector<int> gs = G_range;
  std::sort(gs.begin(), gs.end());
  gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
  std::vector<Family> fams = families;
  std::sort(fams.begin(), fams.end(),
            [](Family a, Family b) { return family_rank(a) < family_rank(b); });
  fams.erase(std::unique(fams.begin(), fams.end()), fams.end());

  SelectionResult out;
  std::vector<std::optional<FitResult>> fits;
  for (int G : gs) {
    for (Family family : fams) {
      FitConfig config = base;
      config.G = G;
      config.family = family;
      ModelScore score;
      score.family = family;
      score.G = G;
      score.rho = count_free_params(family, G, static_cast<int>(data.cols()));
      try {
        FitResult result = fit(data, config);
        score.loglik = result.loglik;
        score.bic = result.bic;
        score.status = result.converged ? "ok" : "max_iter";
        fits.emplace_back(std::move(result));
      } catch (const Error& e) {
        score.failed = true;
        score.loglik = std::nan("");
        score.bic = std::nan("");
        score.status = e.what();
        fits.emplace_back(std::nullopt);
      }
      out.scores.push_back(score);
    }
  }
  out.best = best_score(out.scores);
  if (out.best) out.best_fit = std::move(fits[*out.best]);
  return out;
}

}  // namespace mcghd
