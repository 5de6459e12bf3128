#include "lipdyn/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lipdyn {

namespace {

const Json& req(const Json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key))
        fail("ConfigInvalid", "missing field '" + (path.empty() ? key : path + "." + key) + "'");
    return j.at(key);
}

template <typename T>
T get_or(const Json& j, const std::string& key, T def) {
    if (!j.is_object() || !j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        fail("ConfigInvalid", "field '" + key + "' has the wrong type");
    }
}

Json params_of(const Json& config) {
    Json p = config.contains("params") ? config.at("params") : Json::object();
    if (config.contains("tolerances"))
        for (auto it = config.at("tolerances").begin(); it != config.at("tolerances").end(); ++it)
            p[it.key()] = it.value();
    return p;
}

std::uint64_t main_seed(const Json& config) {
    const Json& seeds = req(config, "seeds", "");
    if (!seeds.contains("main")) fail("ConfigInvalid", "missing field 'seeds.main'");
    return seeds.at("main").get<std::uint64_t>();
}

ModelParams model_params(const Json& m) {
    ModelParams out;
    if (m.contains("params"))
        for (auto it = m.at("params").begin(); it != m.at("params").end(); ++it)
            out[it.key()] = it.value().get<double>();
    return out;
}

BuiltModel model_from(const Json& config) {
    const Json& m = req(config, "model", "");
    return make_builtin_model(req(m, "name", "model").get<std::string>(), model_params(m));
}

BuiltFamily family_from(const Json& config) {
    const Json& f = req(config, "family", "");
    return make_builtin_family(req(f, "name", "family").get<std::string>(),
                               req(f, "etas", "family").get<std::vector<double>>(),
                               model_params(f));
}

SplitLinearMap split_from(const BuiltModel& model, const Json& params) {
    double rho = get_or(params, "rho", 1.0);
    if (model.split && rho == 1.0) return *model.split;
    return split_spectrum(numeric_jacobian(model.model.evaluator, model.x_star), rho);
}

SplitSystem system_from(const BuiltModel& model, const Json& params, std::uint64_t seed) {
    SplitLinearMap split = split_from(model, params);
    double radius = get_or(params, "region_radius", model.region_radius);
    SplitSystem sys = build_split_system(model.model.evaluator, model.x_star, split, 0.0,
                                         false, radius);
    if (model.gamma_analytic) {
        sys.gamma = *model.gamma_analytic;
        sys.gamma_analytic = true;
    } else {
        MapFn n = sys.nonlinear;
        sys.gamma = estimate_lipschitz_constant(n, sys.dim(), radius, sys.norm.full_fn(),
                                                get_or(params, "gamma_pairs", 20000), seed)
                        .value;
    }
    return sys;
}

std::string fmt(double v) { return format_double(v); }

void add_check(PipelineResult& r, const std::string& name, bool pass,
               const std::string& detail) {
    r.checks.push_back({name, pass, detail});
}

GraphTransformParams transform_params(const Json& params, double fallback_radius) {
    GraphTransformParams tp;
    tp.radius = get_or(params, "radius", fallback_radius);
    int nodes = get_or(params, "nodes_per_axis", 0);
    if (nodes > 0) tp.nodes_per_axis.assign(1, nodes);  // resized per axis downstream
    tp.tol = get_or(params, "tol", 1e-10);
    tp.max_sweeps = get_or(params, "max_sweeps", 200);
    return tp;
}

// ---------------------------------------------------------------- split ----

PipelineResult pipeline_split(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "split";
    Json params = params_of(config);
    BuiltModel model = model_from(config);
    Mat matrix;
    if (params.contains("matrix"))
        matrix = mat_from_json(params.at("matrix"));
    else
        matrix = numeric_jacobian(model.model.evaluator, model.x_star);
    double rho = get_or(params, "rho", 1.0);
    SplitLinearMap split = split_spectrum(matrix, rho);
    AdaptedNorm norm = build_adapted_norm(split);

    Json j;
    j["split"] = split_to_json(split);
    j["norm"] = norm_to_json(norm);
    j["resolvent"] = resolvent_bound(split.a, split.b, split.dim_u(), split.dim_s());
    out.write_json("split.json", j);

    add_check(res, "gap_ordering", split.b < rho && rho < split.a,
              "b=" + fmt(split.b) + " rho=" + fmt(rho) + " a=" + fmt(split.a));
    // Operator bounds in the adapted norms, probed on a deterministic sample.
    Rng rng(main_seed(config));
    double worst_s = 0.0, worst_u = 0.0;
    Mat Mu = split.block_u(), Ms = split.block_s();
    Eigen::PartialPivLU<Mat> lu;
    if (split.dim_u() > 0) lu.compute(Mu);
    for (int i = 0; i < 500; ++i) {
        if (split.dim_s() > 0) {
            Vec c = rng.direction(split.dim_s());
            double n0 = norm.norm_s(c);
            if (n0 > 0) worst_s = std::max(worst_s, norm.norm_s(Ms * c) / n0);
        }
        if (split.dim_u() > 0) {
            Vec c = rng.direction(split.dim_u());
            double n0 = norm.norm_u(c);
            if (n0 > 0) worst_u = std::max(worst_u, norm.norm_u(lu.solve(c)) / n0);
        }
    }
    add_check(res, "stable_rate", split.dim_s() == 0 || worst_s <= norm.rate_s + 1e-12,
              "sup ||Ms c||/||c|| = " + fmt(worst_s) + " vs rate " + fmt(norm.rate_s));
    add_check(res, "unstable_rate", split.dim_u() == 0 || worst_u <= 1.0 / norm.rate_u + 1e-12,
              "sup ||Mu^-1 c||/||c|| = " + fmt(worst_u) + " vs 1/rate " + fmt(1.0 / norm.rate_u));
    res.summary = j;
    return res;
}

// ------------------------------------------------------------- manifold ----

PipelineResult pipeline_manifold(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "manifold";
    Json params = params_of(config);
    BuiltModel model = model_from(config);
    SplitSystem sys = system_from(model, params, main_seed(config));
    GraphDirection dir =
        direction_from_string(get_or<std::string>(params, "direction", "unstable"));

    GraphTransformParams tp = transform_params(params, model.region_radius);
    ManifoldResult mr = compute_invariant_graph(sys, dir, tp);

    GraphVerifyParams vp;
    vp.invariance_tol = get_or(params, "invariance_tol", 1e-8);
    vp.seed = main_seed(config);
    vp.check_rho_star = get_or(params, "check_rho_star", true);
    GraphVerifyReport verify = verify_graph(sys, mr.graph, tp, vp);

    out.write_json("graph.json", graph_to_json(mr.graph));
    out.write_text("graph.dat", graph_section_dat(mr.graph, 0, 129));
    Json j;
    j["sweeps"] = mr.sweeps;
    j["converged"] = mr.converged;
    j["final_update"] = mr.final_update;
    j["contraction_sup"] = mr.contraction_sup;
    j["contraction_metric"] = mr.contraction_metric;
    j["contraction_bound"] = mr.contraction_bound;
    j["lip_cert"] = mr.graph.lip_cert;
    j["lip_bound"] = mr.lip_bound;
    j["invariance_residual"] = verify.invariance_residual;
    j["max_rate"] = verify.max_rate;
    j["rate_bound"] = verify.rate_bound;
    j["rho_star_sup_diff"] = verify.rho_star_sup_diff;
    out.write_json("report.json", j);

    add_check(res, "converged", mr.converged, "sweeps=" + std::to_string(mr.sweeps));
    add_check(res, "contraction",
              mr.contraction_metric <= mr.contraction_bound + get_or(params, "contraction_slack", 0.02),
              fmt(mr.contraction_metric) + " vs bound " + fmt(mr.contraction_bound));
    add_check(res, "lipschitz", mr.graph.lip_cert <= mr.lip_bound + get_or(params, "lip_slack", 0.005),
              fmt(mr.graph.lip_cert) + " vs bound " + fmt(mr.lip_bound));
    add_check(res, "invariance", verify.invariance_ok, fmt(verify.invariance_residual));
    add_check(res, "rates", verify.rate_ok,
              fmt(verify.max_rate) + " vs " + fmt(verify.rate_bound));
    if (vp.check_rho_star)
        add_check(res, "rho_star", verify.rho_star_ok, fmt(verify.rho_star_sup_diff));
    res.summary = j;
    return res;
}

// -------------------------------------------------------------- certify ----

PipelineResult pipeline_certify(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "certify";
    Json params = params_of(config);
    BuiltModel model = model_from(config);
    SplitLinearMap split = split_from(model, params);
    CertifyOptions opts;
    opts.seed = main_seed(config);
    opts.n_pairs = get_or(params, "gamma_pairs", 100000);
    double delta = get_or(params, "delta", model.region_radius);
    HyperbolicCertificate cert =
        certify_hyperbolic(model.model.evaluator, model.x_star, split, delta, opts);
    out.write_json("certificate.json", cert_to_json(cert));

    std::string expect = get_or<std::string>(params, "expect", "weak");
    bool pass = expect == "strong" ? cert.strong_flag
               : expect == "weak" ? cert.weak_flag
                                  : true;
    add_check(res, "level_" + expect, pass,
              cert.weak_flag ? (cert.strong_flag ? "strong" : "weak") : cert.failed_condition);

    if (get_or(params, "dichotomy", false)) {
        SplitSystem sys = system_from(model, params, main_seed(config));
        DichotomyReport rep = orbit_dichotomy_check(sys, cert,
                                                    get_or(params, "dichotomy_samples", 200),
                                                    get_or(params, "dichotomy_horizon", 400),
                                                    main_seed(config) + 1);
        add_check(res, "orbit_dichotomy", rep.ok,
                  "exited=" + std::to_string(rep.n_exited) +
                      " converged=" + std::to_string(rep.n_converged) +
                      " undetermined=" + std::to_string(rep.n_undetermined));
        Json jd;
        jd["n_exited"] = rep.n_exited;
        jd["n_converged"] = rep.n_converged;
        jd["n_undetermined"] = rep.n_undetermined;
        res.summary["dichotomy"] = jd;
    }
    res.summary["certificate"] = cert_to_json(cert);
    return res;
}

// ------------------------------------------------------------- continue ----

std::vector<EquilibriumRecord> records_for(const BuiltModel& model, const Json& params,
                                           std::uint64_t seed) {
    std::vector<EquilibriumRecord> recs;
    double delta = get_or(params, "cert_delta", 0.1);
    CertifyOptions opts;
    opts.seed = seed;
    opts.n_pairs = get_or(params, "gamma_pairs", 20000);
    int id = 0;
    for (const auto& x : model.equilibria) {
        EquilibriumRecord rec;
        rec.id = id++;
        rec.x_star = x;
        rec.split = split_spectrum(numeric_jacobian(model.model.evaluator, x), 1.0);
        rec.cert = certify_hyperbolic(model.model.evaluator, x, rec.split, delta, opts);
        recs.push_back(std::move(rec));
    }
    return recs;
}

PipelineResult pipeline_continue(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "continue";
    Json params = params_of(config);
    BuiltFamily fam = family_from(config);
    auto recs = records_for(fam.base, params, main_seed(config));

    FamilyTrackParams tp;
    tp.continuation.seed = main_seed(config);
    tp.continuation.n_samples = get_or(params, "closeness_samples", 20000);
    FamilyTrackReport rep = track_equilibrium_family(fam.family, recs, tp);

    std::vector<std::vector<std::string>> rows;
    bool bounds_ok = true;
    for (const auto& r : rep.rows) {
        bounds_ok = bounds_ok && r.within_bound;
        rows.push_back({fmt(r.eta), std::to_string(r.id), fmt(r.displacement), fmt(r.bound),
                        fmt(r.residual), fmt(r.epsilon), r.within_bound ? "1" : "0"});
    }
    out.write_text("tracking.csv",
                   csv_table({"eta", "id", "displacement", "bound", "residual", "epsilon",
                              "within_bound"},
                             rows));
    Json j;
    j["max_eta_tracked"] = rep.max_eta_tracked;
    j["count_preserved"] = rep.count_preserved;
    j["displacement_monotone"] = rep.displacement_monotone;
    j["stop_reason"] = rep.stop_reason;
    out.write_json("report.json", j);

    add_check(res, "bounds", bounds_ok, std::to_string(rep.rows.size()) + " rows");
    add_check(res, "count_preserved", rep.count_preserved, rep.stop_reason);
    add_check(res, "monotone", rep.displacement_monotone, "");
    res.summary = j;
    return res;
}

// ----------------------------------------------------------- transversal ----

Chart linear_chart(double slope, double offset, double radius) {
    Chart c;
    c.dim_dom = 1;
    c.dim_cod = 1;
    c.radius = radius;
    c.lip = std::abs(slope);
    c.fn = [slope, offset](const Vec& y) {
        return Vec(Vec::Constant(1, slope * y[0] + offset));
    };
    return c;
}

PipelineResult pipeline_transversal(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "transversal";
    Json params = params_of(config);
    double radius = get_or(params, "radius", 1.0);
    double ts = get_or(params, "theta_slope", 0.3);
    double to = get_or(params, "theta_offset", 0.1);
    double ss = get_or(params, "sigma_slope", 0.2);
    double so = get_or(params, "sigma_offset", -0.04);

    Chart theta = linear_chart(ts, to, radius);
    Chart sigma = linear_chart(ss, so, radius);
    IntersectParams ip;
    ip.seed = main_seed(config);
    ip.theta_ref = linear_chart(ts, 0.0, radius);
    ip.sigma_ref = linear_chart(ss, 0.0, radius);
    IntersectionResult ir = intersect_graphs(theta, sigma, ip);

    double oracle = (ss * to + so) / (1.0 - ss * ts);
    TransversalWitness w = recenter_at_intersection(theta, sigma, ir.y1,
                                                    get_or(params, "witness_tol", 1e-8));
    TransversalCheck tc = certify_transversal(w.chart_theta, w.chart_sigma);

    Json j;
    j["intersection"] = to_json(ir.y1);
    j["residual"] = ir.residual;
    j["oracle"] = oracle;
    j["witness"] = witness_to_json(w);
    j["transversal"] = tc.transversal;
    out.write_json("witness.json", j);

    add_check(res, "fixed_point", std::abs(ir.y1[0] - oracle) <= 1e-10,
              fmt(ir.y1[0]) + " vs " + fmt(oracle));
    add_check(res, "recentered", w.radius0 > 0.0, "radius0=" + fmt(w.radius0));
    add_check(res, "transversal", tc.transversal, tc.reason);
    res.summary = j;
    return res;
}

// ----------------------------------------------------------- morse-smale ----

NodeParams node_params_from(const Json& params, std::uint64_t seed) {
    NodeParams np;
    np.delta = get_or(params, "node_delta", 0.1);
    np.certify.seed = seed;
    np.certify.n_pairs = get_or(params, "gamma_pairs", 20000);
    np.transform.tol = get_or(params, "graph_tol", 1e-10);
    np.transform.max_sweeps = get_or(params, "max_sweeps", 200);
    int nodes = get_or(params, "nodes_per_axis", 0);
    if (nodes > 0) np.transform.nodes_per_axis.assign(1, nodes);
    return np;
}

BuildGraphParams graph_params_from(const Json& params, const BuiltModel& model,
                                   std::uint64_t seed) {
    BuildGraphParams gp;
    gp.detect.mesh_count = get_or(params, "mesh_count", 16);
    gp.detect.horizon = get_or(params, "horizon", 400);
    gp.detect.k_confirm = get_or(params, "k_confirm", 10);
    gp.detect.domain_lo = model.model.domain_lo;
    gp.detect.domain_hi = model.model.domain_hi;
    gp.dg1_samples = get_or(params, "dg1_samples", 100);
    gp.dg1_horizon = get_or(params, "dg1_horizon", 600);
    gp.seed = seed;
    return gp;
}

PipelineResult pipeline_morse_smale(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "morse-smale";
    Json params = params_of(config);
    BuiltModel model = model_from(config);
    std::uint64_t seed = main_seed(config);
    NodeParams np = node_params_from(params, seed);
    std::vector<EquilibriumNode> nodes;
    for (std::size_t i = 0; i < model.equilibria.size(); ++i)
        nodes.push_back(make_equilibrium_node(model.model.evaluator, model.equilibria[i],
                                              static_cast<int>(i), np));
    BuildGraphParams gp = graph_params_from(params, model, seed);
    ConnectionGraph graph = build_connection_graph(model.model.evaluator, nodes, gp);

    out.write_json("graph.json", connection_graph_to_json(graph));
    out.write_text("graph.dot", connection_graph_to_dot(graph));

    bool expect_dg = get_or(params, "expect_dg", true);
    add_check(res, "dg_flag", graph.dg_flag == expect_dg,
              std::string("dg_flag=") + (graph.dg_flag ? "true" : "false"));
    if (!expect_dg)
        add_check(res, "cycle_listed", !graph.cycle.empty(),
                  std::to_string(graph.cycle.size()) + " nodes in the cycle");
    else {
        add_check(res, "dg1", graph.dg1.ok,
                  "wandering=" + std::to_string(graph.dg1.n_wandering));
        add_check(res, "transitive", graph.transitive_ok,
                  std::to_string(graph.transitivity_gaps.size()) + " gaps");
    }
    if (params.contains("expect_edges")) {
        std::set<std::pair<int, int>> want, got;
        for (const auto& e : params.at("expect_edges"))
            want.insert({e[0].get<int>(), e[1].get<int>()});
        for (const auto& e : graph.edges) got.insert({e.source_id, e.target_id});
        add_check(res, "edges", want == got,
                  "found " + std::to_string(got.size()) + " edges");
    }
    res.summary = connection_graph_to_json(graph);
    return res;
}

// ------------------------------------------------------------- stability ----

PipelineResult pipeline_stability(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "stability";
    Json params = params_of(config);
    BuiltFamily fam = family_from(config);
    std::uint64_t seed = main_seed(config);

    StabilityParams sp;
    sp.node = node_params_from(params, seed);
    sp.graph = graph_params_from(params, fam.base, seed);
    sp.continuation.seed = seed;
    sp.continuation.n_samples = get_or(params, "closeness_samples", 20000);

    StabilityReport rep = run_stability_experiment(fam.family, fam.base.equilibria, sp);

    std::vector<std::vector<std::string>> rows;
    for (const auto& s : rep.stages)
        rows.push_back({fmt(s.eta), s.continued_ok ? "1" : "0", s.certs_ok ? "1" : "0",
                        s.equivalent ? "1" : "0", fmt(s.max_displacement), fmt(s.epsilon),
                        std::to_string(s.n_edges), s.note});
    out.write_text("stages.csv",
                   csv_table({"eta", "continued", "certified", "equivalent",
                              "max_displacement", "epsilon", "edges", "note"},
                             rows));
    out.write_json("base_graph.json", connection_graph_to_json(rep.base_graph));
    Json j;
    j["largest_equivalent_eta"] = rep.largest_equivalent_eta;
    j["all_equivalent"] = rep.all_equivalent;
    j["base_dg"] = rep.base_graph.dg_flag;
    out.write_json("report.json", j);

    add_check(res, "base_dg", rep.base_graph.dg_flag, "");
    add_check(res, "all_equivalent", rep.all_equivalent,
              "largest eta " + fmt(rep.largest_equivalent_eta));
    res.summary = j;
    return res;
}

// ---------------------------------------------------------------- chafee ----

PipelineResult pipeline_chafee(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "chafee";
    Json params = params_of(config);
    std::uint64_t seed = main_seed(config);
    int modes = get_or(params, "modes", 16);

    EquilibriaParams ep;
    ep.cert_delta = get_or(params, "cert_delta", 0.05);
    ep.certify.n_pairs = get_or(params, "cert_pairs", 2000);
    ep.certify.seed = seed;
    ep.continuation.seed = seed;
    ep.continuation.n_samples = get_or(params, "closeness_samples", 2000);

    if (params.contains("count_lambdas")) {
        auto lambdas = params.at("count_lambdas").get<std::vector<double>>();
        auto rows = verify_equilibrium_count(lambdas, modes, ep);
        std::vector<std::vector<std::string>> csv;
        for (const auto& r : rows)
            csv.push_back({fmt(r.lambda), std::to_string(r.expected),
                           std::to_string(r.found), r.ok ? "1" : "0"});
        out.write_text("counts.csv", csv_table({"lambda", "expected", "found", "ok"}, csv));
        bool ok = true;
        for (const auto& r : rows) ok = ok && r.ok;
        add_check(res, "equilibrium_counts", ok, std::to_string(rows.size()) + " rows");
        res.summary["counts_ok"] = ok;
    }

    if (params.contains("lambda")) {
        double lambda = params.at("lambda").get<double>();
        auto etas = get_or(params, "etas", std::vector<double>{0.0});
        GalerkinOptions gopts;
        gopts.dealias_points = get_or(params, "dealias_points", 0);

        NodeParams np = node_params_from(params, seed);
        ConnectionGraph base_graph;
        bool have_base = false;
        bool equiv_all = true;
        Json stages = Json::array();
        for (double eta : etas) {
            GalerkinModel gm = make_galerkin_model(modes, lambda, eta, gopts);
            auto eqs = find_equilibria(gm, ep);
            // Connection structure lives in the H1 coordinates, where the
            // forcing perturbation is small and the certificates are honest.
            MapFn map = time_one_map_h1(gm);
            std::vector<EquilibriumNode> nodes;
            for (std::size_t i = 0; i < eqs.size(); ++i)
                nodes.push_back(make_equilibrium_node(map, to_h1_coords(gm, eqs[i].coeffs),
                                                      static_cast<int>(i), np));
            BuildGraphParams gp;
            gp.detect.mesh_count = get_or(params, "mesh_count", 2);
            gp.detect.horizon = get_or(params, "horizon", 300);
            gp.detect.k_confirm = get_or(params, "k_confirm", 10);
            double box = get_or(params, "box", 2.0);
            gp.detect.domain_lo = Vec::Constant(modes, -box);
            gp.detect.domain_hi = Vec::Constant(modes, box);
            gp.dg1_samples = get_or(params, "dg1_samples", 10);
            gp.dg1_horizon = get_or(params, "dg1_horizon", 100);
            gp.seed = seed;
            ConnectionGraph graph = build_connection_graph(map, nodes, gp);

            Json stage;
            stage["eta"] = eta;
            stage["n_equilibria"] = eqs.size();
            stage["graph"] = connection_graph_to_json(graph);
            if (eta == 0.0) {
                base_graph = graph;
                have_base = true;
                // Sign structure of the two primary states on an interior grid.
                int pos = -1, neg = -1;
                for (std::size_t i = 0; i < eqs.size(); ++i) {
                    if (eqs[i].unstable_count != 0) continue;
                    if (eqs[i].coeffs[0] > 0) pos = static_cast<int>(i);
                    if (eqs[i].coeffs[0] < 0) neg = static_cast<int>(i);
                }
                bool sign_ok = pos >= 0 && neg >= 0;
                if (sign_ok) {
                    for (auto [x, u] : profile(gm, eqs[static_cast<std::size_t>(pos)].coeffs, 63))
                        sign_ok = sign_ok && u > 0.0;
                    for (auto [x, u] : profile(gm, eqs[static_cast<std::size_t>(neg)].coeffs, 63))
                        sign_ok = sign_ok && u < 0.0;
                    auto prof = profile(gm, eqs[static_cast<std::size_t>(pos)].coeffs, 128);
                    std::vector<std::vector<std::string>> csv;
                    for (auto [x, u] : prof) csv.push_back({fmt(x), fmt(u)});
                    out.write_text("profile_positive.csv", csv_table({"x", "u"}, csv));
                }
                add_check(res, "sign_property", sign_ok, "");
                if (params.contains("expect_edges")) {
                    std::set<std::pair<int, int>> want, got;
                    for (const auto& e : params.at("expect_edges"))
                        want.insert({e[0].get<int>(), e[1].get<int>()});
                    for (const auto& e : graph.edges) got.insert({e.source_id, e.target_id});
                    add_check(res, "base_edges", want == got,
                              std::to_string(got.size()) + " edges");
                }
            } else if (have_base) {
                auto eq = check_geometric_equivalence(base_graph, graph);
                stage["equivalent"] = eq.equivalent;
                equiv_all = equiv_all && eq.equivalent;
            }
            stages.push_back(stage);
        }
        out.write_json("stages.json", stages);
        if (etas.size() > 1)
            add_check(res, "geometric_equivalence", equiv_all, "");
        res.summary["stages"] = stages.size();
    }
    return res;
}

// -------------------------------------------------------------- nemytskii ----

PipelineResult pipeline_nemytskii(const Json& config, ArtifactWriter& out) {
    PipelineResult res;
    res.pipeline = "nemytskii";
    Json params = params_of(config);
    NemytskiiSpec spec;
    spec.affine = get_or<std::string>(params, "f", "sine") == "affine";
    spec.a = get_or(params, "a", 2.0);
    spec.b = get_or(params, "b", 1.0);
    spec.u0 = get_or(params, "u0", 0.0);
    spec.s0 = get_or(params, "s0", M_PI / 2.0);
    spec.p = get_or(params, "p", 2.0);
    std::vector<double> radii;
    if (params.contains("radii"))
        radii = params.at("radii").get<std::vector<double>>();
    else
        for (int k = 1; k <= 10; ++k) radii.push_back(std::pow(2.0, -k));

    NemytskiiResult nr = nemytskii_remainder_diagnostic(spec, radii);
    std::vector<std::vector<std::string>> rows;
    for (auto [r, ratio] : nr.rows) rows.push_back({fmt(r), fmt(ratio)});
    out.write_text("ratios.csv", csv_table({"radius", "ratio"}, rows));
    Json j;
    j["limit"] = nr.limit;
    out.write_json("report.json", j);

    if (spec.affine) {
        bool ok = true;
        for (auto [r, ratio] : nr.rows) ok = ok && ratio <= 1e-12;
        add_check(res, "affine_vanishes", ok, "limit=" + fmt(nr.limit));
    } else {
        // Closed-form target for the constant-background bump.
        auto f = [&](double t) { return std::sin(t); };
        double target = std::abs(f(spec.u0 + spec.s0) - f(spec.u0) -
                                 std::cos(spec.u0) * spec.s0) /
                        std::abs(spec.s0);
        bool ok = std::abs(nr.limit - target) <= 0.02 * target;
        add_check(res, "limit_matches", ok, fmt(nr.limit) + " vs " + fmt(target));
    }
    res.summary = j;
    return res;
}

}  // namespace

std::string config_hash(const Json& config) { return hash_hex(config.dump()); }

void validate_config(const Json& config) {
    if (!config.is_object()) fail("ConfigInvalid", "config must be a JSON object");
    std::string p = req(config, "pipeline", "").get<std::string>();
    static const std::set<std::string> known = {
        "split",       "manifold",  "certify", "continue", "transversal",
        "morse-smale", "stability", "chafee",  "nemytskii"};
    if (!known.count(p)) fail("ConfigInvalid", "unknown pipeline '" + p + "'");
    main_seed(config);
    if (p == "continue" || p == "stability") req(config, "family", "");
    if (p == "split" || p == "manifold" || p == "certify" || p == "morse-smale")
        req(config, "model", "");
    if (config.contains("split")) {
        // Declared spectral bounds for the unit-circle splitting.
        const Json& s = config.at("split");
        double a = get_or(s, "a", 2.0);
        double b = get_or(s, "b", 0.5);
        if (!(a > 1.0) || !(b < 1.0))
            fail("GapViolated", "declared split bounds need b < 1 < a, got a=" + fmt(a) +
                                    ", b=" + fmt(b));
    }
}

PipelineResult run_pipeline(const Json& config, const std::string& out_dir) {
    validate_config(config);
    ArtifactWriter out(out_dir);
    std::string name = config.at("pipeline").get<std::string>();
    PipelineResult res;
    if (name == "split") res = pipeline_split(config, out);
    else if (name == "manifold") res = pipeline_manifold(config, out);
    else if (name == "certify") res = pipeline_certify(config, out);
    else if (name == "continue") res = pipeline_continue(config, out);
    else if (name == "transversal") res = pipeline_transversal(config, out);
    else if (name == "morse-smale") res = pipeline_morse_smale(config, out);
    else if (name == "stability") res = pipeline_stability(config, out);
    else if (name == "chafee") res = pipeline_chafee(config, out);
    else if (name == "nemytskii") res = pipeline_nemytskii(config, out);
    else fail("ConfigInvalid", "unknown pipeline '" + name + "'");

    Json checks = Json::array();
    for (const auto& c : res.checks) {
        Json jc;
        jc["name"] = c.name;
        jc["pass"] = c.pass;
        jc["detail"] = c.detail;
        checks.push_back(jc);
    }
    Json summary;
    summary["pipeline"] = res.pipeline;
    summary["checks"] = checks;
    summary["all_pass"] = res.all_pass();
    out.write_json("summary.json", summary);
    out.finalize(config_hash(config));
    return res;
}

}  // namespace lipdyn
