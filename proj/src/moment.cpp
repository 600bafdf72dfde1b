#include "ncsos/moment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ncsos::moment {

namespace {

constexpr double kGnsPdTol = 1e-10;
constexpr double kMixBlockTol = 1e-9;
constexpr double kDomainTol = 1e-8;
constexpr double kMomentMatchTol = 1e-6;

double minEigOf(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Word-indexed evaluation table w -> w(X), built by extending on the first
// letter so every suffix is already present.
std::map<Word, Eigen::MatrixXd> wordEvalTable(const MatTuple& X,
                                              int maxDegree) {
  std::map<Word, Eigen::MatrixXd> table;
  for (const Word& w : enumerateBasis(X.nvars(), maxDegree)) {
    if (w.isEmpty()) {
      table.emplace(w, Eigen::MatrixXd::Identity(X.level(), X.level()));
      continue;
    }
    const auto& letters = w.letters();
    Word suffix{std::vector<int>(letters.begin() + 1, letters.end())};
    table.emplace(w, X[letters[0] - 1] * table.at(suffix));
  }
  return table;
}

}  // namespace

MomentFunctional::MomentFunctional(int nvars, int nu, int degreeBound)
    : nvars_(nvars), nu_(nu), degreeBound_(degreeBound) {
  if (nvars < 1 || nu < 1 || degreeBound < 0) {
    throw std::invalid_argument("bad moment functional shape");
  }
  for (const Word& w : enumerateBasis(nvars, degreeBound)) {
    values_.emplace(w, Eigen::MatrixXd::Zero(nu, nu));
  }
}

double MomentFunctional::value(const Word& w, int s, int t) const {
  return valueMatrix(w)(s, t);
}

const Eigen::MatrixXd& MomentFunctional::valueMatrix(const Word& w) const {
  auto it = values_.find(w);
  if (it == values_.end()) {
    throw std::out_of_range("missing moments for word " + w.str() +
                            " (degree bound " + std::to_string(degreeBound_) +
                            ")");
  }
  return it->second;
}

void MomentFunctional::setValue(const Word& w, int s, int t, double v) {
  auto it = values_.find(w);
  if (it == values_.end()) {
    throw std::out_of_range("word " + w.str() + " beyond the degree bound");
  }
  it->second(s, t) = v;
}

void MomentFunctional::setValueMatrix(const Word& w,
                                      const Eigen::MatrixXd& V) {
  auto it = values_.find(w);
  if (it == values_.end()) {
    throw std::out_of_range("word " + w.str() + " beyond the degree bound");
  }
  if (V.rows() != nu_ || V.cols() != nu_) {
    throw std::invalid_argument("moment value matrix must be nu x nu");
  }
  it->second = V;
}

double MomentFunctional::apply(const MatPoly& f) const {
  if (f.rows() != nu_ || f.cols() != nu_) {
    throw std::invalid_argument("functional applies to nu x nu polynomials");
  }
  double acc = 0;
  for (const auto& [w, B] : f.terms()) {
    acc += B.cwiseProduct(valueMatrix(w)).sum();
  }
  return acc;
}

void MomentFunctional::symmetrize() {
  for (auto& [w, V] : values_) {
    Word rw = w.reversed();
    if (rw < w) continue;  // handle each pair once, from the smaller word
    Eigen::MatrixXd& W = values_.at(rw);
    if (rw == w) {
      V = ((V + V.transpose()) / 2.0).eval();
    } else {
      Eigen::MatrixXd avg = (V + W.transpose()) / 2.0;
      V = avg;
      W = avg.transpose();
    }
  }
}

double MomentFunctional::maxSymmetryViolation() const {
  double m = 0;
  for (const auto& [w, V] : values_) {
    const Eigen::MatrixXd& W = values_.at(w.reversed());
    m = std::max(m, (V - W.transpose()).cwiseAbs().maxCoeff());
  }
  return m;
}

MomentFunctional MomentFunctional::scaledAdd(
    double mu, const MomentFunctional& other) const {
  if (other.nvars_ != nvars_ || other.nu_ != nu_ ||
      other.degreeBound_ != degreeBound_) {
    throw std::invalid_argument("functional shapes differ");
  }
  MomentFunctional out(nvars_, nu_, degreeBound_);
  for (const auto& [w, V] : values_) {
    out.values_.at(w) = V + mu * other.values_.at(w);
  }
  return out;
}

Eigen::MatrixXd momentMatrix(const MomentFunctional& lam, int k) {
  if (2 * k > lam.degreeBound()) {
    throw std::out_of_range("moment matrix at " + std::to_string(k) +
                            " needs moments to degree " + std::to_string(2 * k));
  }
  const int nu = lam.nu();
  auto basis = enumerateBasis(lam.nvars(), k);
  const int n = static_cast<int>(basis.size()) * nu;
  Eigen::MatrixXd M(n, n);
  for (std::size_t vi = 0; vi < basis.size(); ++vi) {
    const Word vr = basis[vi].reversed();
    for (std::size_t ui = 0; ui < basis.size(); ++ui) {
      // Row (v,a), column (u,b) pair as <f_(u,b), f_(v,a)> = lambda(E_ab v*u),
      // the Gram pairing of the GNS form.
      const Eigen::MatrixXd& V = lam.valueMatrix(vr.concat(basis[ui]));
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < nu; ++b) {
          M(vi * nu + a, ui * nu + b) = V(a, b);
        }
      }
    }
  }
  return ((M + M.transpose()) / 2.0).eval();
}

Eigen::MatrixXd localizingMatrix(const MomentFunctional& lam, const MatPoly& q,
                                 int k) {
  if (q.rows() != q.cols()) {
    throw std::invalid_argument("localizing constraint must be square");
  }
  const int need = 2 * k + std::max(0, q.degree());
  if (need > lam.degreeBound()) {
    throw std::out_of_range("localizing matrix needs moments to degree " +
                            std::to_string(need));
  }
  const int nu = lam.nu();
  const int ell = q.rows();
  auto basis = enumerateBasis(lam.nvars(), k);
  const int n = static_cast<int>(basis.size()) * ell * nu;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t vi = 0; vi < basis.size(); ++vi) {
    const Word vr = basis[vi].reversed();
    for (std::size_t ui = 0; ui < basis.size(); ++ui) {
      for (const auto& [w, Qw] : q.terms()) {
        const Eigen::MatrixXd& V = lam.valueMatrix(vr.concat(w).concat(basis[ui]));
        for (int c = 0; c < ell; ++c) {
          for (int d = 0; d < ell; ++d) {
            if (Qw(c, d) == 0.0) continue;
            for (int a = 0; a < nu; ++a) {
              for (int b = 0; b < nu; ++b) {
                M((vi * ell + c) * nu + a, (ui * ell + d) * nu + b) +=
                    Qw(c, d) * V(a, b);
              }
            }
          }
        }
      }
    }
  }
  return ((M + M.transpose()) / 2.0).eval();
}

MomentFunctional functionalFromWitness(const MatTuple& X,
                                       const Eigen::VectorXd& gamma, int nu,
                                       int kmax) {
  const int N = X.level();
  if (gamma.size() != static_cast<Eigen::Index>(N) * nu) {
    throw std::invalid_argument("gamma must carry nu blocks of dim(X)");
  }
  const int bound = 2 * kmax + 2;
  MomentFunctional lam(X.nvars(), nu, bound);

  // vec[(w,t)] = w(X) gamma_t by extension on the leading letter.
  std::map<Word, Eigen::MatrixXd> vecs;  // columns indexed by t
  Eigen::MatrixXd gammaCols(N, nu);
  for (int t = 0; t < nu; ++t) gammaCols.col(t) = gamma.segment(t * N, N);
  for (const Word& w : enumerateBasis(X.nvars(), bound)) {
    Eigen::MatrixXd V;
    if (w.isEmpty()) {
      V = gammaCols;
    } else {
      const auto& letters = w.letters();
      Word suffix{std::vector<int>(letters.begin() + 1, letters.end())};
      V = X[letters[0] - 1] * vecs.at(suffix);
    }
    Eigen::MatrixXd val(nu, nu);
    for (int s = 0; s < nu; ++s) {
      for (int t = 0; t < nu; ++t) {
        val(s, t) = gammaCols.col(s).dot(V.col(t));
      }
    }
    lam.setValueMatrix(w, val);
    vecs.emplace(w, std::move(V));
  }
  lam.symmetrize();
  Eigen::MatrixXd check = momentMatrix(lam, kmax + 1);
  const double scale = std::max(1.0, check.cwiseAbs().maxCoeff());
  if (minEigOf(check) < -1e-10 * scale) {
    throw std::runtime_error("witness moments failed the PSD check");
  }
  return lam;
}

MomentFunctional referenceFunctional(const MonicPencil& L, int nu, int k,
                                     int nsamples, std::uint64_t seed) {
  const int g = L.nvars();
  const int n = k + 1;
  const int bound = 2 * k + 2;
  const double normSum = L.coeffNormSum();
  const double eps = normSum > 0 ? 1.0 / (2.0 * normSum) : 1.0;
  const double dim = g * n * (n + 1) / 2.0;

  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng rng(seed + 1000003ull * attempt);
    MomentFunctional lam(g, nu, bound);
    double weight = 1.0;
    for (int i = 0; i < nsamples; ++i) {
      weight /= 2.0;
      std::vector<Eigen::MatrixXd> Xs;
      double norm2 = 0;
      for (int j = 0; j < g; ++j) {
        Xs.push_back(rng.gaussianSymmetric(n));
        norm2 += Xs.back().squaredNorm();
      }
      const double radius =
          eps * std::pow(rng.uniform(), 1.0 / dim) / std::sqrt(norm2);
      for (auto& Xj : Xs) Xj *= radius;
      MatTuple X(std::move(Xs));
      auto table = wordEvalTable(X, bound);
      for (const auto& [w, wx] : table) {
        const double tr = weight * wx.trace();
        Eigen::MatrixXd V = lam.valueMatrix(w);
        for (int s = 0; s < nu; ++s) V(s, s) += tr;
        lam.setValueMatrix(w, V);
      }
    }
    lam.symmetrize();
    if (minEigOf(momentMatrix(lam, k)) >= kGnsPdTol) return lam;
  }
  throw std::runtime_error(
      "reference functional: degree-" + std::to_string(k) +
      " moment block stayed singular after 5 sampling rounds");
}

double Witness::pairing(const MatPoly& p) const {
  Eigen::MatrixXd P = p.evaluate(X);
  return gamma.dot(P * gamma);
}

RefutationSdp::Key RefutationSdp::canonical(const Word& w, int s, int t) const {
  Key a{w, s, t};
  Key b{w.reversed(), t, s};
  return b < a ? b : a;
}

RefutationSdp assembleRefutationSdp(const MatPoly& p, const MonicPencil& L,
                                    int d, double traceBound) {
  if (p.rows() != p.cols()) {
    throw std::invalid_argument("target polynomial must be square");
  }
  if (!p.isSymmetric(1e-10)) {
    throw std::invalid_argument("target polynomial must be symmetric");
  }
  if (p.nvars() != L.nvars()) {
    throw std::invalid_argument("variable counts differ");
  }
  if (p.degree() > 2 * d + 1) {
    throw std::invalid_argument("refutation at level d needs deg p <= 2d+1");
  }

  RefutationSdp out;
  out.d = d;
  out.nu = p.rows();
  out.nvars = p.nvars();
  out.traceBound = traceBound;
  out.momBasis = enumerateBasis(p.nvars(), d + 1);
  out.locBasis = enumerateBasis(p.nvars(), d);

  const int nu = out.nu;
  const int ell = L.size();
  const int NM = static_cast<int>(out.momBasis.size()) * nu;
  const int NL = static_cast<int>(out.locBasis.size()) * ell * nu;
  out.problem.blockDims = {NM, NL, 1};

  // Group the upper-triangle positions of the moment block by the moment
  // they represent: position ((v,a),(u,b)) carries lambda(E_ab (x) v*u).
  std::map<RefutationSdp::Key, std::vector<std::pair<int, int>>> groups;
  for (int i = 0; i < NM; ++i) {
    const Word& v = out.momBasis[i / nu];
    const int a = i % nu;
    const Word vr = v.reversed();
    for (int j = i; j < NM; ++j) {
      const Word& u = out.momBasis[j / nu];
      const int b = j % nu;
      groups[out.canonical(vr.concat(u), a, b)].emplace_back(i, j);
    }
  }
  for (const auto& [key, positions] : groups) {
    out.repPosition.emplace(key, positions.front());
  }

  auto posEntry = [](int block, std::pair<int, int> pos,
                     double coeff) -> sdp::Entry {
    return {block, pos.first, pos.second,
            pos.first == pos.second ? coeff : coeff / 2.0};
  };

  // Hankel structure: all positions of one group hold the same value.
  for (const auto& [key, positions] : groups) {
    for (std::size_t i = 1; i < positions.size(); ++i) {
      sdp::Constraint c;
      c.entries.push_back(posEntry(0, positions[i], 1.0));
      c.entries.push_back(posEntry(0, positions[0], -1.0));
      c.rhs = 0.0;
      out.problem.constraints.push_back(std::move(c));
    }
  }

  // Localizing block ties: every entry is the q-weighted moment combination.
  const MatPoly Lpoly = L.toPoly();
  for (int i = 0; i < NL; ++i) {
    const Word& v = out.locBasis[i / (ell * nu)];
    const int c0 = (i / nu) % ell;
    const int a = i % nu;
    const Word vr = v.reversed();
    for (int j = i; j < NL; ++j) {
      const Word& u = out.locBasis[j / (ell * nu)];
      const int d0 = (j / nu) % ell;
      const int b = j % nu;
      sdp::Constraint con;
      con.entries.push_back(posEntry(1, {i, j}, 1.0));
      std::map<std::pair<int, int>, double> acc;
      for (const auto& [w, Qw] : Lpoly.terms()) {
        const double coeff = Qw(c0, d0);
        if (coeff == 0.0) continue;
        const auto key = out.canonical(vr.concat(w).concat(u), a, b);
        acc[out.repPosition.at(key)] -= coeff;
      }
      for (const auto& [pos, coeff] : acc) {
        if (coeff != 0.0) con.entries.push_back(posEntry(0, pos, coeff));
      }
      con.rhs = 0.0;
      out.problem.constraints.push_back(std::move(con));
    }
  }

  // Normalization lambda(I (x) empty word) = 1.
  {
    sdp::Constraint c;
    for (int s = 0; s < nu; ++s) c.entries.push_back({0, s, s, 1.0});
    c.rhs = 1.0;
    out.problem.constraints.push_back(std::move(c));
  }
  // Trace cap tr(M)/traceBound + slack = 1. Unit right-hand side keeps |b|
  // of order one (a raw cap would loosen every other row's absolute
  // tolerance), and the slack reads directly as the unused fraction.
  {
    sdp::Constraint c;
    for (int i = 0; i < NM; ++i) {
      c.entries.push_back({0, i, i, 1.0 / traceBound});
    }
    c.entries.push_back({2, 0, 0, 1.0});
    c.rhs = 1.0;
    out.problem.constraints.push_back(std::move(c));
  }

  // Objective: min lambda(p).
  std::map<std::pair<int, int>, double> obj;
  for (const auto& [w, B] : p.terms()) {
    for (int s = 0; s < nu; ++s) {
      for (int t = 0; t < nu; ++t) {
        if (B(s, t) == 0.0) continue;
        obj[out.repPosition.at(out.canonical(w, s, t))] += B(s, t);
      }
    }
  }
  for (const auto& [pos, coeff] : obj) {
    out.problem.objective.push_back(posEntry(0, pos, coeff));
  }
  return out;
}

MomentFunctional extractFunctional(const RefutationSdp& rsdp,
                                   const sdp::SdpSolution& sol) {
  if (sol.Z.size() != 3) {
    throw std::invalid_argument("solution does not match the refutation SDP");
  }
  const Eigen::MatrixXd& M = sol.Z[0];
  MomentFunctional lam(rsdp.nvars, rsdp.nu, 2 * rsdp.d + 2);
  for (const Word& w : enumerateBasis(rsdp.nvars, 2 * rsdp.d + 2)) {
    Eigen::MatrixXd V(rsdp.nu, rsdp.nu);
    for (int s = 0; s < rsdp.nu; ++s) {
      for (int t = 0; t < rsdp.nu; ++t) {
        const auto pos = rsdp.repPosition.at(rsdp.canonical(w, s, t));
        V(s, t) = M(pos.first, pos.second);
      }
    }
    lam.setValueMatrix(w, V);
  }
  lam.symmetrize();
  return lam;
}

MixResult mix(const MomentFunctional& lam, const MomentFunctional& ref,
              std::optional<double> mu, int k, const MatPoly* margin,
              const MonicPencil* domain) {
  MixResult out;
  if (mu.has_value()) {
    out.ok = true;
    out.mu = *mu;
    out.mixed = lam.scaledAdd(*mu, ref);
    out.blockMinEig = minEigOf(momentMatrix(*out.mixed, k));
    return out;
  }
  const double margin0 = margin ? lam.apply(*margin) : 0.0;
  for (double m = 1e-8; m <= 1e2 * (1 + 1e-12); m *= 10.0) {
    MomentFunctional mixed = lam.scaledAdd(m, ref);
    const double eig = minEigOf(momentMatrix(mixed, k));
    if (eig < kMixBlockTol) continue;
    if (domain) {
      const double locEig =
          minEigOf(localizingMatrix(mixed, domain->toPoly(), k));
      if (locEig < -kDomainTol * eig) continue;
    }
    if (margin) {
      const double val = mixed.apply(*margin);
      if (!(val < margin0 / 2.0)) {
        std::ostringstream msg;
        msg << "mixing weight " << m << " reaches a PD block but moves the "
            << "margin from " << margin0 << " to " << val;
        out.message = msg.str();
        return out;
      }
    }
    out.ok = true;
    out.mu = m;
    out.blockMinEig = eig;
    out.mixed = std::move(mixed);
    return out;
  }
  out.message = "no mixing weight up to 1e2 makes the degree-" +
                std::to_string(k) +
                " block positive definite with a localizing matrix clear of "
                "the domain tolerance";
  return out;
}

Witness gnsExtract(const MomentFunctional& lam, int k) {
  if (lam.degreeBound() < 2 * k + 2) {
    throw std::invalid_argument("GNS extraction needs moments to 2k+2");
  }
  const int nu = lam.nu();
  const int g = lam.nvars();
  auto basis = enumerateBasis(g, k);
  const int N = static_cast<int>(basis.size()) * nu;

  Eigen::MatrixXd M = momentMatrix(lam, k);
  if (minEigOf(M) < kGnsPdTol) {
    throw SingularMomentError(
        "degree-" + std::to_string(k) +
        " moment block is numerically singular; regularize by mixing first");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw SingularMomentError("Cholesky of the moment block failed");
  }
  Eigen::MatrixXd Lc = llt.matrixL();

  std::vector<Eigen::MatrixXd> Xs;
  for (int j = 1; j <= g; ++j) {
    Eigen::MatrixXd S(N, N);
    for (std::size_t vi = 0; vi < basis.size(); ++vi) {
      const Word mid = basis[vi].reversed().concat(Word::letter(j));
      for (std::size_t ui = 0; ui < basis.size(); ++ui) {
        const Eigen::MatrixXd& V = lam.valueMatrix(mid.concat(basis[ui]));
        for (int a = 0; a < nu; ++a) {
          for (int b = 0; b < nu; ++b) {
            S(vi * nu + a, ui * nu + b) = V(a, b);
          }
        }
      }
    }
    // X_j = R^{-T} S R^{-1} = L^{-1} S L^{-T}, symmetrized.
    Eigen::MatrixXd t1 = Lc.triangularView<Eigen::Lower>().solve(S);
    Eigen::MatrixXd t2 =
        Lc.triangularView<Eigen::Lower>().solve(t1.transpose());
    Xs.push_back(((t2 + t2.transpose()) / 2.0).eval());
  }

  Eigen::VectorXd gamma(static_cast<Eigen::Index>(N) * nu);
  Eigen::MatrixXd R = Lc.transpose();
  for (int s = 0; s < nu; ++s) {
    gamma.segment(static_cast<Eigen::Index>(s) * N, N) = R.col(s);
  }
  Witness w{MatTuple(std::move(Xs)), std::move(gamma), nu, 0.0};
  return w;
}

WitnessCheck verifyWitness(const MomentFunctional& lam, const Witness& w,
                           int k) {
  MomentFunctional rec = functionalFromWitness(w.X, w.gamma, w.nu, k);
  WitnessCheck out;
  for (const Word& word : enumerateBasis(lam.nvars(), 2 * k + 2)) {
    const double diff =
        (rec.valueMatrix(word) - lam.valueMatrix(word)).cwiseAbs().maxCoeff();
    if (word.degree() <= 2 * k + 1) {
      out.residualLow = std::max(out.residualLow, diff);
    } else {
      out.residualTop = std::max(out.residualTop, diff);
    }
  }
  return out;
}

FlatnessReport flatnessCheck(const MomentFunctional& lam, int k,
                             double rankTol) {
  auto rankOf = [&](const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                      Eigen::EigenvaluesOnly);
    const double mx = es.eigenvalues().cwiseAbs().maxCoeff();
    if (mx <= 0) return 0;
    int r = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()[i] > rankTol * mx) ++r;
    }
    return r;
  };
  FlatnessReport rep;
  rep.rankK = rankOf(momentMatrix(lam, k));
  rep.rankK1 = rankOf(momentMatrix(lam, k + 1));
  rep.flat = rep.rankK == rep.rankK1;
  return rep;
}

RefuteResult refute(const MatPoly& p, const MonicPencil& L, int d,
                    const RefuteOptions& opts) {
  RefuteResult out;
  const int nu = p.rows();
  double tau = opts.traceBound > 0
                   ? opts.traceBound
                   : 1e3 * nu * static_cast<double>(sigmaDim(p.nvars(), d + 1));

  sdp::SdpOptions sopts = opts.sdp;
  sopts.feasTol = std::min(sopts.feasTol, 1e-9);
  sopts.gapTol = std::min(sopts.gapTol, 1e-9);
  sopts.maxIter = std::max(sopts.maxIter, 200);

  RefutationSdp rsdp;
  sdp::SdpSolution sol;
  for (int attempt = 0;; ++attempt) {
    rsdp = assembleRefutationSdp(p, L, d, tau);
    sol = sdp::solve(rsdp.problem, sopts);
    if (sol.status != sdp::SdpStatus::Optimal) {
      out.status = RefuteStatus::Indeterminate;
      out.message = "refutation SDP ended " + sdp::statusName(sol.status);
      return out;
    }
    out.optimum = sol.primalObjective;
    const double slack = sol.Z[2](0, 0);  // fraction of the cap left unused
    out.traceCapped = slack <= 1e-6;
    if (out.traceCapped && attempt < 2) {
      tau *= 10.0;
      continue;
    }
    break;
  }

  if (out.optimum >= -opts.witnessTol) {
    out.status = RefuteStatus::NoRefutation;
    out.nearBoundary = out.optimum < 0;
    if (out.nearBoundary) {
      out.message = "optimum within the witness tolerance of zero";
    }
    return out;
  }

  MomentFunctional lam = extractFunctional(rsdp, sol);
  const int nsamples =
      std::max<int>(8, nu * static_cast<int>(sigmaDim(p.nvars(), d)) + 4);
  MomentFunctional ref =
      referenceFunctional(L, nu, d, nsamples, opts.seed);
  MixResult mres = mix(lam, ref, std::nullopt, d, &p, &L);
  if (!mres.ok) {
    out.status = RefuteStatus::Indeterminate;
    out.message = "mixing failed: " + mres.message;
    return out;
  }
  out.mixWeight = mres.mu;

  std::optional<Witness> extracted;
  try {
    extracted = gnsExtract(*mres.mixed, d);
  } catch (const SingularMomentError& e) {
    out.status = RefuteStatus::Indeterminate;
    out.message = e.what();
    return out;
  }
  Witness& w = *extracted;

  w.value = w.pairing(p);
  out.domainMinEig = minEigOf(L.evaluate(w.X));
  WitnessCheck wc = verifyWitness(*mres.mixed, w, d);
  out.momentResidual = wc.residualLow;

  std::ostringstream diag;
  bool ok = true;
  if (!(w.value < -opts.witnessTol)) {
    ok = false;
    diag << "pairing " << w.value << " fails the witness tolerance; ";
  }
  if (out.domainMinEig < -kDomainTol) {
    ok = false;
    diag << "witness leaves the domain (min eig " << out.domainMinEig
         << "); ";
  }
  if (out.momentResidual > kMomentMatchTol) {
    ok = false;
    diag << "GNS moments mismatch " << out.momentResidual << "; ";
  }
  if (!ok) {
    out.status = RefuteStatus::Indeterminate;
    out.message = diag.str();
    return out;
  }
  out.status = RefuteStatus::Witness;
  out.witness = std::move(w);
  return out;
}

}  // namespace ncsos::moment
