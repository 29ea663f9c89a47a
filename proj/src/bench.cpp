#include "esbandit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace esb {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw std::invalid_argument("unknown key \"" + it.key() + "\" in " + where);
    }
}

std::string format12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

EnvironmentSpec parse_environment(const json& j) {
    require_keys(j, {"kind", "K", "d", "noise_sigma", "theta_norm"}, "environment");
    EnvironmentSpec env;
    env.kind = reward_kind_from_string(j.at("kind").get<std::string>());
    env.K = j.at("K").get<int>();
    env.d = j.at("d").get<int>();
    env.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("theta_norm")) env.theta_norm = j.at("theta_norm").get<double>();
    return env;
}

AgentSpec parse_agent(const json& j) {
    require_keys(j,
                 {"name", "variant", "m", "lambda", "sigma_r", "tau", "opt_iters", "opt_step",
                  "net_width", "net_depth", "ucb_width", "ts_scale", "warm_start", "glm_link",
                  "anytime", "t0", "b"},
                 "agent");
    AgentSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.config.variant = agent_variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("m")) spec.config.m = j.at("m").get<int>();
    if (j.contains("lambda")) spec.config.lambda = j.at("lambda").get<double>();
    if (j.contains("sigma_r")) spec.config.sigma_r = j.at("sigma_r").get<double>();
    if (j.contains("tau")) spec.config.tau = j.at("tau").get<int>();
    if (j.contains("opt_iters")) spec.config.optimizer.iters = j.at("opt_iters").get<int>();
    if (j.contains("opt_step")) spec.config.optimizer.step = j.at("opt_step").get<double>();
    if (j.contains("net_width")) spec.config.net_width = j.at("net_width").get<int>();
    if (j.contains("net_depth")) spec.config.net_depth = j.at("net_depth").get<int>();
    if (j.contains("ucb_width")) spec.config.ucb_width = j.at("ucb_width").get<double>();
    if (j.contains("ts_scale")) spec.config.ts_scale = j.at("ts_scale").get<double>();
    if (j.contains("warm_start")) spec.config.warm_start = j.at("warm_start").get<bool>();
    if (j.contains("glm_link")) {
        const std::string link = j.at("glm_link").get<std::string>();
        if (link == "identity") spec.config.glm_link = LinkKind::Identity;
        else if (link == "logistic") spec.config.glm_link = LinkKind::Logistic;
        else throw std::invalid_argument("agent field \"glm_link\" must be identity or logistic");
    }
    if (j.contains("anytime")) spec.config.anytime = j.at("anytime").get<bool>();
    if (j.contains("t0")) spec.config.schedule.t0 = j.at("t0").get<long>();
    if (j.contains("b")) spec.config.schedule.b = j.at("b").get<double>();

    if (spec.name.empty()) throw std::invalid_argument("agent field \"name\" must be non-empty");
    if (spec.config.m < 1) throw std::invalid_argument("agent field \"m\" must be >= 1");
    if (spec.config.sigma_r < 0.0)
        throw std::invalid_argument("agent field \"sigma_r\" must be >= 0");
    if (spec.config.tau < 0) throw std::invalid_argument("agent field \"tau\" must be >= 0");
    if (spec.config.optimizer.iters < 1)
        throw std::invalid_argument("agent field \"opt_iters\" must be >= 1");
    if (spec.config.optimizer.step <= 0.0)
        throw std::invalid_argument("agent field \"opt_step\" must be > 0");
    return spec;
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (horizon < 1) throw std::invalid_argument("field \"horizon\" must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("field \"seeds\" must be non-empty");
    if (agents.empty()) throw std::invalid_argument("field \"agents\" must be non-empty");
    if (environment.K < 2) throw std::invalid_argument("field \"environment.K\" must be >= 2");
    if (environment.d < 1) throw std::invalid_argument("field \"environment.d\" must be >= 1");
    if (environment.noise_sigma < 0.0)
        throw std::invalid_argument("field \"environment.noise_sigma\" must be >= 0");
}

ExperimentSpec parse_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("spec parse error: ") + e.what());
    }
    return parse_spec_json(j);
}

ExperimentSpec parse_spec_json(const json& j) {
    require_keys(j, {"name", "environment", "horizon", "seeds", "output_dir", "plot", "agents"},
                 "spec");
    ExperimentSpec spec;
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
    spec.environment = parse_environment(j.at("environment"));
    spec.horizon = j.at("horizon").get<long>();
    for (const auto& s : j.at("seeds")) spec.seeds.push_back(s.get<std::uint64_t>());
    if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("plot")) spec.plot = j.at("plot").get<bool>();
    for (const auto& a : j.at("agents")) spec.agents.push_back(parse_agent(a));
    spec.validate();
    return spec;
}

json serialize_spec(const ExperimentSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["environment"] = {{"kind", to_string(spec.environment.kind)},
                        {"K", spec.environment.K},
                        {"d", spec.environment.d},
                        {"noise_sigma", spec.environment.noise_sigma},
                        {"theta_norm", spec.environment.theta_norm}};
    j["horizon"] = spec.horizon;
    j["seeds"] = spec.seeds;
    j["output_dir"] = spec.output_dir;
    j["plot"] = spec.plot;
    j["agents"] = json::array();
    for (const auto& a : spec.agents) {
        json ja;
        ja["name"] = a.name;
        ja["variant"] = to_string(a.config.variant);
        ja["m"] = a.config.m;
        ja["lambda"] = a.config.lambda;
        ja["sigma_r"] = a.config.sigma_r;
        ja["tau"] = a.config.tau;
        ja["opt_iters"] = a.config.optimizer.iters;
        ja["opt_step"] = a.config.optimizer.step;
        ja["net_width"] = a.config.net_width;
        ja["net_depth"] = a.config.net_depth;
        ja["ucb_width"] = a.config.ucb_width;
        ja["ts_scale"] = a.config.ts_scale;
        ja["warm_start"] = a.config.warm_start;
        ja["glm_link"] = a.config.glm_link == LinkKind::Identity ? "identity" : "logistic";
        ja["anytime"] = a.config.anytime;
        ja["t0"] = a.config.schedule.t0;
        ja["b"] = a.config.schedule.b;
        j["agents"].push_back(ja);
    }
    return j;
}

void write_trace(const RegretTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "round,arm,inst_regret,cum_regret\n";
    for (const auto& r : trace.rounds) {
        out << r.t << ',' << r.arm << ',' << format12(r.inst_regret) << ','
            << format12(r.cum_regret) << '\n';
    }
    out << "# seed," << trace.seed << '\n';
    out << "# restarts";
    for (long r : trace.restarts) out << ',' << r;
    out << '\n';
    if (!out) throw std::runtime_error("write failed for trace file: " + path);
}

RegretTrace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trace file: " + path);
    RegretTrace trace;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::stringstream ss(line.substr(1));
            std::string tag;
            std::getline(ss, tag, ',');
            if (tag == " seed") {
                std::string v;
                std::getline(ss, v, ',');
                trace.seed = std::stoull(v);
            } else if (tag == " restarts") {
                std::string v;
                while (std::getline(ss, v, ',')) trace.restarts.push_back(std::stol(v));
            }
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        RegretRound r;
        std::getline(ss, field, ',');
        r.t = std::stol(field);
        std::getline(ss, field, ',');
        r.arm = std::stoi(field);
        std::getline(ss, field, ',');
        r.inst_regret = std::stod(field);
        std::getline(ss, field, ',');
        r.cum_regret = std::stod(field);
        trace.rounds.push_back(r);
    }
    return trace;
}

void write_summary(const SuiteResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary file: " + path);
    out << "agent,t,mean_cum_regret,stderr,wallclock_s\n";
    for (const auto& agent : result.agents) {
        for (std::size_t i = 0; i < agent.mean_cum_regret.size(); ++i) {
            out << agent.name << ',' << (i + 1) << ',' << format12(agent.mean_cum_regret[i])
                << ',' << format12(agent.stderr_cum_regret[i]) << ','
                << format12(agent.wallclock_s) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for summary file: " + path);
}

void emit_plot(const SuiteResult& result, const std::string& path) {
    if (result.agents.empty()) throw std::invalid_argument("emit_plot: empty summary");

    const double width = 860.0, height = 520.0;
    const double ml = 70.0, mr = 180.0, mt = 20.0, mb = 50.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    std::size_t horizon = 0;
    double ymax = 0.0;
    for (const auto& a : result.agents) {
        horizon = std::max(horizon, a.mean_cum_regret.size());
        for (std::size_t i = 0; i < a.mean_cum_regret.size(); ++i)
            ymax = std::max(ymax, a.mean_cum_regret[i] + a.stderr_cum_regret[i]);
    }
    if (ymax <= 0.0) ymax = 1.0;

    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                             "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const int ncolors = 8;

    auto px = [&](double t) { return ml + pw * t / static_cast<double>(horizon); };
    auto py = [&](double y) { return mt + ph * (1.0 - y / ymax); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };

    // Subsample long curves; stride chosen deterministically from the length.
    const std::size_t max_points = 512;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"14\">round t</text>\n";
    svg << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">cumulative regret</text>\n";
    svg << "<text x=\"" << ml << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"12\">0</text>\n";
    svg << "<text x=\"" << ml + pw << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"12\">" << horizon << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << num(ymax) << "</text>\n";

    for (std::size_t ai = 0; ai < result.agents.size(); ++ai) {
        const auto& a = result.agents[ai];
        const char* color = palette[ai % ncolors];
        const std::size_t n = a.mean_cum_regret.size();
        const std::size_t stride = std::max<std::size_t>(1, n / max_points);

        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
        if (idx.back() != n - 1) idx.push_back(n - 1);

        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i : idx)
            svg << num(px(static_cast<double>(i + 1))) << ','
                << num(py(a.mean_cum_regret[i] + a.stderr_cum_regret[i])) << ' ';
        for (auto it = idx.rbegin(); it != idx.rend(); ++it)
            svg << num(px(static_cast<double>(*it + 1))) << ','
                << num(py(std::max(0.0, a.mean_cum_regret[*it] - a.stderr_cum_regret[*it])))
                << ' ';
        svg << "\"/>\n";

        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i : idx)
            svg << num(px(static_cast<double>(i + 1))) << ',' << num(py(a.mean_cum_regret[i]))
                << ' ';
        svg << "\"/>\n";

        const double ly = mt + 16.0 + 18.0 * static_cast<double>(ai);
        svg << "<rect x=\"" << ml + pw + 12 << "\" y=\"" << ly - 9
            << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        svg << "<text x=\"" << ml + pw + 30 << "\" y=\"" << ly + 2 << "\" font-size=\"13\">"
            << a.name << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write plot file: " + path);
    out << svg.str();
}

SuiteResult run_suite(const ExperimentSpec& spec, const RunOptions& options) {
    spec.validate();
    ExperimentSpec eff = spec;
    if (options.output_dir) eff.output_dir = *options.output_dir;
    if (options.seeds) eff.seeds = *options.seeds;
    if (options.plot) eff.plot = *options.plot;
    eff.validate();

    std::filesystem::create_directories(eff.output_dir);

    SuiteResult result;
    result.output_dir = eff.output_dir;

    const std::size_t n_agents = eff.agents.size();
    const std::size_t n_seeds = eff.seeds.size();

    struct Slot {
        RegretTrace trace;
        bool ok = false;
        std::string error;
        double seconds = 0.0;
    };
    std::vector<Slot> slots(n_agents * n_seeds);

    auto run_one = [&](std::size_t ai, std::size_t si) {
        Slot& slot = slots[ai * n_seeds + si];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Instance inst = generate_instance(eff.environment.kind, eff.environment.K,
                                              eff.environment.d, eff.seeds[si],
                                              eff.environment.theta_norm);
            inst.model.noise_sigma = eff.environment.noise_sigma;
            slot.trace = run_episode(inst.model, inst.arms, eff.agents[ai].config, eff.horizon,
                                     eff.seeds[si]);
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
        slot.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const int parallel = std::max(1, options.parallel);
    if (parallel == 1) {
        for (std::size_t ai = 0; ai < n_agents; ++ai)
            for (std::size_t si = 0; si < n_seeds; ++si) run_one(ai, si);
    } else {
        std::vector<std::pair<std::size_t, std::size_t>> jobs;
        for (std::size_t ai = 0; ai < n_agents; ++ai)
            for (std::size_t si = 0; si < n_seeds; ++si) jobs.emplace_back(ai, si);
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= jobs.size()) return;
                run_one(jobs[k].first, jobs[k].second);
            }
        };
        std::vector<std::future<void>> pool;
        for (int w = 0; w < parallel; ++w) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }

    for (std::size_t ai = 0; ai < n_agents; ++ai) {
        AgentSummary summary;
        summary.name = eff.agents[ai].name;
        std::vector<const RegretTrace*> traces;
        for (std::size_t si = 0; si < n_seeds; ++si) {
            Slot& slot = slots[ai * n_seeds + si];
            summary.wallclock_s += slot.seconds;
            if (!slot.ok) {
                result.failures.push_back({summary.name, eff.seeds[si], slot.error});
                continue;
            }
            const std::string path = eff.output_dir + "/" + sanitize(summary.name) + "_seed" +
                                     std::to_string(eff.seeds[si]) + ".csv";
            write_trace(slot.trace, path);
            result.trace_paths.push_back(path);
            traces.push_back(&slot.trace);
        }
        if (!traces.empty()) {
            const std::size_t T = traces.front()->rounds.size();
            summary.mean_cum_regret.assign(T, 0.0);
            summary.stderr_cum_regret.assign(T, 0.0);
            for (std::size_t t = 0; t < T; ++t) {
                double mean = 0.0;
                for (const auto* tr : traces) mean += tr->rounds[t].cum_regret;
                mean /= static_cast<double>(traces.size());
                double var = 0.0;
                for (const auto* tr : traces) {
                    const double dv = tr->rounds[t].cum_regret - mean;
                    var += dv * dv;
                }
                if (traces.size() > 1) var /= static_cast<double>(traces.size() - 1);
                summary.mean_cum_regret[t] = mean;
                summary.stderr_cum_regret[t] =
                    std::sqrt(var / static_cast<double>(traces.size()));
            }
        }
        result.agents.push_back(std::move(summary));
    }

    write_summary(result, eff.output_dir + "/summary.csv");
    if (eff.plot) emit_plot(result, eff.output_dir + "/regret_curves.svg");
    return result;
}

}  // namespace esb
