#include "lipdyn/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipdyn {

namespace {

Vec ball_point(Rng& rng, int dim, double radius, const NormFn& norm) {
    if (dim == 0) return Vec(0);
    Vec d = rng.direction(dim);
    double nd = norm(d);
    if (nd <= 0.0) return Vec::Zero(dim);
    return d * (radius * std::pow(rng.uniform01(), 1.0 / dim) / nd);
}

}  // namespace

ClosenessEstimate measure_closeness(const MapFn& base, const MapFn& pert, const Vec& center,
                                    double radius, const NormFn& norm, int n_samples,
                                    std::uint64_t seed, double inflation) {
    const int dim = static_cast<int>(center.size());
    Rng rng(seed);
    ClosenessEstimate out;
    Vec px = center;
    Vec pd = pert(px) - base(px);
    double sup = norm(pd), lip = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        Vec x = center + ball_point(rng, dim, radius, norm);
        Vec d = pert(x) - base(x);
        if (!all_finite(d)) fail("NonFiniteValue", "perturbation difference is not finite");
        sup = std::max(sup, norm(d));
        double sep = norm(x - px);
        if (sep > 1e-12) lip = std::max(lip, norm(d - pd) / sep);
        px = x;
        pd = d;
    }
    out.sup_dev = sup * inflation;
    out.lip_dev = lip * inflation;
    out.value = std::max(out.sup_dev, out.lip_dev);
    return out;
}

ContinuationResult continue_equilibrium(const SplitSystem& base, const HyperbolicCertificate& cert,
                                        const MapFn& perturbed, const Vec& base_x_star,
                                        const ContinuationParams& params) {
    const int dim = base.dim();
    const NormFn norm = base.norm.full_fn();
    const double delta1 = params.delta1.value_or(base.region_radius);
    if (delta1 <= 0.0) fail("ConfigInvalid", "continuation radius must be positive");

    MapFn shifted = [&perturbed, base_x_star](const Vec& x) -> Vec {
        return perturbed(base_x_star + x) - base_x_star;
    };
    MapFn base_map = [&base](const Vec& x) { return base.map(x); };

    // The closeness bound enters the fixed-point argument in two roles: the sup
    // deviation feeds the ball-invariance estimate, the Lipschitz deviation feeds
    // the contraction factor. A caller-supplied epsilon bounds both at once.
    double eps_sup, eps_lip;
    if (params.epsilon) {
        eps_sup = eps_lip = *params.epsilon;
    } else {
        auto est = measure_closeness(base_map, shifted, Vec::Zero(dim), delta1, norm,
                                     params.n_samples, params.seed);
        eps_sup = est.sup_dev;
        eps_lip = est.lip_dev;
    }

    const double gamma = cert.gamma;
    const double R = cert.resolvent;
    if ((gamma + eps_lip) * R >= 1.0)
        fail("PreconditionFailed", "(gamma + epsilon) * resolvent < 1 fails: (" +
                                       std::to_string(gamma) + " + " + std::to_string(eps_lip) +
                                       ") * " + std::to_string(R));
    if ((eps_sup + (gamma + eps_lip) * delta1) * R > delta1)
        fail("PreconditionFailed",
             "(epsilon + gamma * delta1) * resolvent <= delta1 fails at delta1 = " +
                 std::to_string(delta1));
    const double gp = gamma + eps_lip;
    if (cert.b + 2.0 * gp >= 1.0 || cert.a - 2.0 * gp <= 1.0)
        fail("PreconditionFailed", "b + 2(gamma + epsilon) < 1 < a - 2(gamma + epsilon) fails");

    Mat ImL = Mat::Identity(dim, dim) - base.split.matrix;
    Eigen::FullPivLU<Mat> lu(ImL);
    if (!lu.isInvertible()) fail("NotHyperbolicAtUnitCircle", "I - L is singular");

    Vec x = Vec::Zero(dim);
    int it = 0;
    double step = std::numeric_limits<double>::infinity();
    for (; it < params.max_iter; ++it) {
        Vec n1 = shifted(x) - base.split.matrix * x;
        Vec next = lu.solve(n1);
        step = norm(next - x);
        x = next;
        if (step <= params.fp_tol) break;
    }
    if (step > params.fp_tol)
        fail("NotConverged", "equilibrium continuation stalled at step " + std::to_string(step));

    ContinuationResult out;
    out.iterations = it + 1;
    out.residual = norm(shifted(x) - x);
    out.displacement = norm(x);
    out.epsilon_used = std::max(eps_sup, eps_lip);
    out.delta1_used = delta1;
    out.bound_delta1 = eps_sup * R / (1.0 - (gamma + eps_lip) * R);
    out.gamma_pert = gamma + eps_lip;
    out.x_star = base_x_star + x;
    return out;
}

FamilyTrackReport track_equilibrium_family(const PerturbationFamily& family,
                                           const std::vector<EquilibriumRecord>& equilibria,
                                           const FamilyTrackParams& params) {
    if (equilibria.empty()) fail("ConfigInvalid", "no equilibria to track");
    for (const auto& rec : equilibria)
        if (!rec.cert.strong_flag)
            fail("SmallnessViolated", "equilibrium " + std::to_string(rec.id) +
                                          " lacks a strong certificate: " +
                                          rec.cert.failed_condition);

    double max_delta = 0.0;
    for (const auto& rec : equilibria) max_delta = std::max(max_delta, rec.cert.delta);
    for (std::size_t i = 0; i < equilibria.size(); ++i)
        for (std::size_t j = i + 1; j < equilibria.size(); ++j) {
            double d = (equilibria[i].x_star - equilibria[j].x_star).norm();
            if (d < params.min_separation_factor * max_delta)
                fail("SeparationViolated",
                     "equilibria " + std::to_string(equilibria[i].id) + " and " +
                         std::to_string(equilibria[j].id) + " sit " + std::to_string(d) +
                         " apart, below " +
                         std::to_string(params.min_separation_factor * max_delta));
        }

    MapFn base_map = family.member(0.0);
    std::vector<SplitSystem> systems;
    systems.reserve(equilibria.size());
    for (const auto& rec : equilibria)
        systems.push_back(build_split_system(base_map, rec.x_star, rec.split, rec.cert.gamma,
                                             rec.cert.gamma_analytic, rec.cert.delta));

    FamilyTrackReport report;
    std::vector<double> sup_by_eta;
    std::vector<double> etas_done;
    for (double eta : family.etas) {
        if (eta <= 0.0) continue;
        MapFn pert = family.member(eta);
        std::vector<FamilyTrackRow> stage;
        bool stopped = false;
        for (std::size_t i = 0; i < equilibria.size(); ++i) {
            ContinuationParams cp = params.continuation;
            cp.delta1 = cp.delta1 ? cp.delta1 : std::optional<double>(equilibria[i].cert.delta);
            cp.seed = params.continuation.seed + 1000 * static_cast<std::uint64_t>(i);
            try {
                ContinuationResult res =
                    continue_equilibrium(systems[i], equilibria[i].cert, pert,
                                         equilibria[i].x_star, cp);
                FamilyTrackRow row;
                row.eta = eta;
                row.id = equilibria[i].id;
                row.x_star = res.x_star;
                row.displacement = res.displacement;
                row.residual = res.residual;
                row.bound = res.bound_delta1;
                row.epsilon = res.epsilon_used;
                row.gamma_pert = res.gamma_pert;
                row.within_bound = res.displacement <= res.bound_delta1 + 1e-12;
                stage.push_back(std::move(row));
            } catch (const Error& e) {
                report.stop_reason = "eta = " + std::to_string(eta) + ", equilibrium " +
                                     std::to_string(equilibria[i].id) + ": " + e.what();
                if (std::string(e.code()) == "NotConverged") report.count_preserved = false;
                stopped = true;
                break;
            }
        }
        if (stopped) break;
        double sup = 0.0;
        for (const auto& row : stage) sup = std::max(sup, row.displacement);
        sup_by_eta.push_back(sup);
        etas_done.push_back(eta);
        for (auto& row : stage) report.rows.push_back(std::move(row));
        report.max_eta_tracked = eta;
    }
    // Smaller eta must give smaller displacement (up to slack), whatever the
    // order the family listed them in.
    std::vector<std::pair<double, double>> by_eta;
    for (std::size_t k = 0; k < sup_by_eta.size(); ++k)
        by_eta.emplace_back(etas_done[k], sup_by_eta[k]);
    std::sort(by_eta.begin(), by_eta.end());
    for (std::size_t k = 0; k + 1 < by_eta.size(); ++k)
        if (by_eta[k].second > params.monotone_slack * by_eta[k + 1].second + 1e-14)
            report.displacement_monotone = false;
    return report;
}

ManifoldDeviationReport manifold_deviation(
    const SplitSystem& base, const LipschitzGraph& base_graph,
    const std::vector<std::tuple<double, SplitSystem, LipschitzGraph>>& perturbed,
    const DeviationParams& params) {
    double flat_sup = 0.0;
    for (const auto& v : base_graph.values)
        flat_sup = std::max(flat_sup, base.norm.norm_s(v));
    if (flat_sup > 1e-6)
        fail("ConfigInvalid",
             "base graph is not flat: sup = " + std::to_string(flat_sup) +
                 "; straighten the base system first");

    ManifoldDeviationReport report;
    const NormFn ns = base.norm.norm_s_fn();
    const NormFn nu = base.norm.norm_u_fn();
    const int du = base.dim_u();

    for (const auto& entry : perturbed) {
        DeviationRow row;
        row.eta = std::get<0>(entry);
        const SplitSystem& sys = std::get<1>(entry);
        const LipschitzGraph& g = std::get<2>(entry);
        const double r = std::min(base_graph.grid.radius, g.grid.radius);

        Rng rng(params.seed);
        double sup = 0.0;
        for (long idx = 0; idx < g.grid.node_count(); ++idx) {
            Vec xi = g.grid.node(idx);
            if (xi.lpNorm<Eigen::Infinity>() > r) continue;
            sup = std::max(sup, ns(g.eval(xi) - base_graph.eval(xi)));
        }
        for (int i = 0; i < params.n_samples / 10; ++i) {
            Vec xi(du);
            for (int k = 0; k < du; ++k) xi[k] = (2.0 * rng.uniform01() - 1.0) * r;
            sup = std::max(sup, ns(g.eval(xi) - base_graph.eval(xi)));
        }
        row.sup_dev = sup;
        row.lip_dev = g.lip_cert;

        // Displacement of the transform applied to the flat section: the
        // stable nonlinearity component along the base axis.
        double eps_sup = 0.0;
        for (int i = 0; i < params.n_samples; ++i) {
            Vec xi(du);
            for (int k = 0; k < du; ++k) xi[k] = (2.0 * rng.uniform01() - 1.0) * r;
            Vec x = base.norm.from_coords(xi, Vec::Zero(base.dim_s()));
            eps_sup = std::max(eps_sup, ns(sys.n_s(x) - base.n_s(x)));
        }
        eps_sup *= params.inflation;

        const double a = sys.split.a, b = sys.split.b, gamma = sys.gamma;
        const double q = (a - 2.0 * gamma > 0.0) ? (b + 2.0 * gamma) / (a - 2.0 * gamma)
                                                 : std::numeric_limits<double>::infinity();
        row.sup_bound = q < 1.0 ? eps_sup / (1.0 - q) : std::numeric_limits<double>::infinity();

        // Lipschitz constant of the stable nonlinearity on the thin tube the
        // perturbed graph lives in.
        const double tube = std::max(row.sup_dev, 1e-9) * 1.5;
        double K = 0.0;
        Vec px = base.norm.from_coords(Vec::Zero(du), Vec::Zero(base.dim_s()));
        Vec pv = sys.n_s(px);
        for (int i = 0; i < params.n_samples; ++i) {
            Vec xi(du);
            for (int k = 0; k < du; ++k) xi[k] = (2.0 * rng.uniform01() - 1.0) * r;
            Vec es = ball_point(rng, base.dim_s(), tube, ns);
            Vec x = base.norm.from_coords(xi, es);
            Vec v = sys.n_s(x);
            double sep = std::max(nu(base.norm.coords_u(x - px)), ns(base.norm.coords_s(x - px)));
            if (sep > 1e-12) K = std::max(K, ns(v - pv) / sep);
            px = x;
            pv = v;
        }
        K *= params.inflation;
        row.k_eta = K;
        const double denom = a - b - 2.0 * gamma - K;
        row.lip_bound = denom > 0.0 ? K / denom : std::numeric_limits<double>::infinity();

        row.sup_ok = row.sup_dev <= params.slack * row.sup_bound + 1e-12;
        row.lip_ok = row.lip_dev <= params.slack * row.lip_bound + 1e-12;
        if (!row.sup_ok || !row.lip_ok) report.all_ok = false;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace lipdyn
