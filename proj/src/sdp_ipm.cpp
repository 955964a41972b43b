#include "netcert/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <ostream>

#include "netcert/error.hpp"

namespace netcert::sdp {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::NearOptimal:
      return "near-optimal";
    case Status::MaxIterations:
      return "max-iterations";
    case Status::NumericalError:
      return "numerical-error";
  }
  return "unknown";
}

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

}  // namespace

void Problem::write(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "# maximize b'y  s.t.  C_j - sum_i y_i A_ji >= 0,  c_k - a_k'y >= 0\n";
  out << "variables " << variables << '\n';
  out << "b";
  for (Eigen::Index i = 0; i < b.size(); ++i) out << ' ' << b(i);
  out << '\n';
  out << "blocks " << blocks.size() << '\n';
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    out << "block " << j << " dim " << blocks[j].dim() << " terms " << blocks[j].A.size() << '\n';
    out << "C\n";
    write_matrix(out, blocks[j].C);
    for (const auto& [id, a] : blocks[j].A) {
      out << "A " << id << '\n';
      write_matrix(out, a);
    }
  }
  out << "scalars " << scalars.size() << '\n';
  for (const auto& s : scalars) {
    out << s.c;
    for (const auto& [id, a] : s.a) out << ' ' << id << ':' << a;
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BlockState {
  MatrixXd X, S, Sinv;
};

/// Largest step alpha with M + alpha dM still positive semidefinite.
double max_step(const MatrixXd& M, const MatrixXd& dM) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd Z = llt.matrixL().solve(dM);
  Z = llt.matrixL().solve(Z.transpose()).transpose();
  const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (Z + Z.transpose()), Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff();
  return lo < 0.0 ? -1.0 / lo : std::numeric_limits<double>::infinity();
}

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (dv(k) < 0.0) alpha = std::min(alpha, -v(k) / dv(k));
  }
  return alpha;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

class InteriorPoint final : public Backend {
 public:
  std::string name() const override { return "ipm"; }
  Solution solve(const Problem& problem, const Options& options) const override;
};

// Infeasible primal-dual path following with the HKM search direction and
// Mehrotra's predictor-corrector.
Solution InteriorPoint::solve(const Problem& pr, const Options& opt) const {
  const auto start = std::chrono::steady_clock::now();
  const int nv = pr.variables;
  if (pr.b.size() != nv) throw std::invalid_argument("objective length differs from the variable count");
  const int nb = static_cast<int>(pr.blocks.size());
  const int ns = static_cast<int>(pr.scalars.size());

  // Scalar constraints as c - A_s' y >= 0 with dense A_s (nv x ns).
  VectorXd c_s(ns);
  MatrixXd A_s = MatrixXd::Zero(nv, ns);
  for (int k = 0; k < ns; ++k) {
    c_s(k) = pr.scalars[k].c;
    for (const auto& [id, a] : pr.scalars[k].a) A_s(id, k) += a;
  }

  // Vectorized coefficients per block for the Schur complement product.
  std::vector<MatrixXd> Avec(nb);
  std::vector<std::vector<int>> ids(nb);
  double total_dim = ns;
  double norm_C = c_s.squaredNorm();
  for (int j = 0; j < nb; ++j) {
    const auto& blk = pr.blocks[j];
    const int d = blk.dim();
    total_dim += d;
    norm_C += blk.C.squaredNorm();
    Avec[j].resize(d * d, static_cast<Eigen::Index>(blk.A.size()));
    for (std::size_t t = 0; t < blk.A.size(); ++t) {
      const auto& [id, a] = blk.A[t];
      if (id < 0 || id >= nv || a.rows() != d || a.cols() != d) {
        throw std::invalid_argument("malformed SDP block coefficient");
      }
      Avec[j].col(static_cast<Eigen::Index>(t)) = Eigen::Map<const VectorXd>(a.data(), d * d);
      ids[j].push_back(id);
    }
  }
  norm_C = std::sqrt(norm_C);
  const double norm_b = pr.b.norm();

  auto apply_adjoint = [&](int j, const VectorXd& y) {
    MatrixXd out = MatrixXd::Zero(pr.blocks[j].dim(), pr.blocks[j].dim());
    for (const auto& [id, a] : pr.blocks[j].A) out += y(id) * a;
    return out;
  };
  auto apply_operator = [&](int j, const MatrixXd& Y, VectorXd& out) {
    const VectorXd v = Avec[j].transpose() * Eigen::Map<const VectorXd>(Y.data(), Y.size());
    for (std::size_t t = 0; t < ids[j].size(); ++t) out(ids[j][t]) += v(static_cast<Eigen::Index>(t));
  };

  // Starting point scaled to the data.
  std::vector<BlockState> st(nb);
  for (int j = 0; j < nb; ++j) {
    const auto& blk = pr.blocks[j];
    const double d = blk.dim();
    double xi = std::max(10.0, std::sqrt(d)), eta = std::max(10.0, std::sqrt(d));
    double max_a = 0.0;
    for (const auto& [id, a] : blk.A) {
      const double na = a.norm();
      max_a = std::max(max_a, na);
      xi = std::max(xi, d * (1.0 + std::abs(pr.b(id))) / (1.0 + na));
    }
    eta = std::max(eta, (1.0 + std::max(max_a, blk.C.norm())) / std::sqrt(d));
    st[j].X = xi * MatrixXd::Identity(blk.dim(), blk.dim());
    st[j].S = eta * MatrixXd::Identity(blk.dim(), blk.dim());
  }
  VectorXd x_s(ns), s_s(ns);
  for (int k = 0; k < ns; ++k) {
    const double na = A_s.col(k).norm();
    double xi = 10.0, eta = 10.0;
    for (const auto& [id, a] : pr.scalars[k].a) xi = std::max(xi, (1.0 + std::abs(pr.b(id))) / (1.0 + std::abs(a)));
    eta = std::max(eta, 1.0 + std::max(na, std::abs(c_s(k))));
    x_s(k) = xi;
    s_s(k) = eta;
  }
  VectorXd y = VectorXd::Zero(nv);

  Solution sol, best;
  sol.status = Status::MaxIterations;
  double best_measure = std::numeric_limits<double>::infinity();
  int stalls = 0, no_progress = 0;

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    // Residuals and measures.
    VectorXd rp = pr.b;
    std::vector<MatrixXd> Rd(nb);
    double gap = x_s.dot(s_s), pobj = c_s.dot(x_s), dinf2 = 0.0;
    for (int j = 0; j < nb; ++j) {
      VectorXd ax = VectorXd::Zero(nv);
      apply_operator(j, st[j].X, ax);
      rp -= ax;
      Rd[j] = pr.blocks[j].C - apply_adjoint(j, y) - st[j].S;
      dinf2 += Rd[j].squaredNorm();
      gap += (st[j].X.cwiseProduct(st[j].S)).sum();
      pobj += (pr.blocks[j].C.cwiseProduct(st[j].X)).sum();
    }
    rp -= A_s * x_s;
    const VectorXd rd_s = c_s - A_s.transpose() * y - s_s;
    dinf2 += rd_s.squaredNorm();
    const double dobj = pr.b.dot(y);
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = std::sqrt(dinf2) / (1.0 + norm_C);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double mu = gap / total_dim;

    sol.y = y;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.primal_infeasibility = pinf;
    sol.dual_infeasibility = dinf;
    sol.iterations = iter;
    const double measure = std::max({relgap, pinf, dinf});
    if (measure < 0.5 * best_measure) {
      no_progress = 0;
    } else if (++no_progress >= 5 && best_measure < opt.stall_tolerance) {
      sol = best;
      sol.iterations = iter;
      sol.status = Status::NearOptimal;
      break;
    }
    if (measure < best_measure) {
      best_measure = measure;
      best = sol;
    }

    if (opt.verbose) {
      std::fprintf(stderr, "ipm %3d  pobj % .9e  dobj % .9e  gap %.2e  pinf %.2e  dinf %.2e\n", iter, pobj, dobj,
                   relgap, pinf, dinf);
    }
    if (measure < opt.tolerance) {
      sol.status = Status::Optimal;
      break;
    }
    if (iter == opt.max_iterations) {
      if (best_measure < opt.stall_tolerance) {
        sol = best;
        sol.iterations = iter;
        sol.status = Status::NearOptimal;
      }
      break;
    }

    // Schur complement M_il = <A_l, X A_i S^-1> plus the scalar part.
    MatrixXd M = A_s * (x_s.cwiseQuotient(s_s)).asDiagonal() * A_s.transpose();
    bool ok = true;
    for (int j = 0; j < nb && ok; ++j) {
      Eigen::LLT<MatrixXd> llt(st[j].S);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      st[j].Sinv = llt.solve(MatrixXd::Identity(st[j].S.rows(), st[j].S.cols()));
      st[j].Sinv = sym(st[j].Sinv);
      const int d = pr.blocks[j].dim();
      MatrixXd G(d * d, static_cast<Eigen::Index>(ids[j].size()));
      for (std::size_t t = 0; t < ids[j].size(); ++t) {
        const MatrixXd g = st[j].X * pr.blocks[j].A[t].second * st[j].Sinv;
        G.col(static_cast<Eigen::Index>(t)) = Eigen::Map<const VectorXd>(g.data(), d * d);
      }
      const MatrixXd Mj = Avec[j].transpose() * G;
      for (std::size_t a = 0; a < ids[j].size(); ++a) {
        for (std::size_t b = 0; b < ids[j].size(); ++b) {
          M(ids[j][a], ids[j][b]) += Mj(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
    }
    if (!ok) {
      sol.status = Status::NumericalError;
      break;
    }
    M = sym(M);
    Eigen::LLT<MatrixXd> schur(M);
    if (schur.info() != Eigen::Success) {
      const double shift = 1e-14 * std::max(1.0, M.diagonal().maxCoeff());
      schur.compute(M + shift * MatrixXd::Identity(nv, nv));
      if (schur.info() != Eigen::Success) {
        sol.status = Status::NumericalError;
        break;
      }
    }

    struct Direction {
      VectorXd dy;
      std::vector<MatrixXd> dX, dS;
      VectorXd dx_s, ds_s;
    };
    auto direction = [&](double target, const Direction* pred) {
      std::vector<MatrixXd> R(nb);
      VectorXd rhs = rp;
      for (int j = 0; j < nb; ++j) {
        R[j] = target * st[j].Sinv - st[j].X - st[j].X * Rd[j] * st[j].Sinv;
        if (pred) R[j] -= pred->dX[j] * pred->dS[j] * st[j].Sinv;
        VectorXd ar = VectorXd::Zero(nv);
        apply_operator(j, R[j], ar);
        rhs -= ar;
      }
      VectorXd r_s = (VectorXd::Constant(ns, target) - x_s.cwiseProduct(s_s) - x_s.cwiseProduct(rd_s));
      if (pred) r_s -= pred->dx_s.cwiseProduct(pred->ds_s);
      r_s = r_s.cwiseQuotient(s_s);
      rhs -= A_s * r_s;

      Direction out;
      out.dy = schur.solve(rhs);
      out.dX.resize(nb);
      out.dS.resize(nb);
      for (int j = 0; j < nb; ++j) {
        out.dS[j] = Rd[j] - apply_adjoint(j, out.dy);
        MatrixXd dx = target * st[j].Sinv - st[j].X - st[j].X * out.dS[j] * st[j].Sinv;
        if (pred) dx -= pred->dX[j] * pred->dS[j] * st[j].Sinv;
        out.dX[j] = sym(dx);
      }
      out.ds_s = rd_s - A_s.transpose() * out.dy;
      VectorXd num = VectorXd::Constant(ns, target) - x_s.cwiseProduct(s_s) - x_s.cwiseProduct(out.ds_s);
      if (pred) num -= pred->dx_s.cwiseProduct(pred->ds_s);
      out.dx_s = num.cwiseQuotient(s_s);
      return out;
    };
    auto steps = [&](const Direction& dir) {
      double ap = max_step(x_s, dir.dx_s), ad = max_step(s_s, dir.ds_s);
      for (int j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(st[j].X, dir.dX[j]));
        ad = std::min(ad, max_step(st[j].S, dir.dS[j]));
      }
      return std::pair{ap, ad};
    };

    const Direction pred = direction(0.0, nullptr);
    auto [ap_aff, ad_aff] = steps(pred);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double gap_aff = (x_s + ap_aff * pred.dx_s).dot(s_s + ad_aff * pred.ds_s);
    for (int j = 0; j < nb; ++j) {
      gap_aff += ((st[j].X + ap_aff * pred.dX[j]).cwiseProduct(st[j].S + ad_aff * pred.dS[j])).sum();
    }
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);

    const Direction corr = direction(sigma * mu, &pred);
    auto [ap, ad] = steps(corr);
    const double gamma = 0.9 + 0.09 * std::min({1.0, ap_aff, ad_aff});
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (ap < 1e-10 && ad < 1e-10) {
      if (++stalls >= 3) {
        sol.status = Status::NumericalError;
        break;
      }
    } else {
      stalls = 0;
    }

    for (int j = 0; j < nb; ++j) {
      st[j].X = sym(st[j].X + ap * corr.dX[j]);
      st[j].S = sym(st[j].S + ad * corr.dS[j]);
    }
    x_s += ap * corr.dx_s;
    s_s += ad * corr.ds_s;
    y += ad * corr.dy;
  }

  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace

std::unique_ptr<Backend> make_backend(std::string_view name) {
  if (name == "ipm") return std::make_unique<InteriorPoint>();
  throw BackendMissing("SDP backend '" + std::string(name) + "' is not available (available: ipm)");
}

std::vector<std::string> available_backends() { return {"ipm"}; }

}  // namespace netcert::sdp
