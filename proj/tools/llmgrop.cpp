// Command-line front end: check, plan, simulate, bench, render.

#include <llmgrop/oracle_http.hpp>
#include <llmgrop/pipeline.hpp>
#include <llmgrop/sim.hpp>
#include <llmgrop/svg.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace llmgrop;

namespace
{
    // Exit codes.
    constexpr int kOk = 0;
    constexpr int kInconsistent = 1;
    constexpr int kFailure = 2;

    struct ConfigError : Error
    {
        using Error::Error;
    };

    struct Options
    {
        std::string data_dir = LLMGROP_DATA_DIR;
        std::string scene;
        int task = 0;
        std::string oracle = "static";
        std::string static_table;
        std::string replay;
        std::uint64_t seed = 0;
        double lambda = 0.3;
        std::string out = ".";
        std::string config;
        std::string plan;
        std::string relations;
        int trials = 20;
        std::string methods = "llm-grop,latp,tpra,grop";
        std::string tasks = "1,2,3,4,5,6,7,8";
        unsigned jobs = 1;
        bool fixed_chair = false;
    };

    std::string read_file (const std::string &path)
    {
        std::ifstream in (path, std::ios::binary);
        if (!in)
            throw ConfigError ("cannot open " + path);
        std::ostringstream os;
        os << in.rdbuf ();
        return os.str ();
    }

    void write_file (const fs::path &path, const std::string &text)
    {
        if (path.has_parent_path ())
            fs::create_directories (path.parent_path ());
        std::ofstream out (path, std::ios::binary);
        if (!out)
            throw ConfigError ("cannot write " + path.string ());
        out << text;
    }

    std::vector<std::string> split_csv (const std::string &s)
    {
        std::vector<std::string> out;
        std::stringstream ss (s);
        for (std::string item; std::getline (ss, item, ',');)
            if (!item.empty ())
                out.push_back (item);
        return out;
    }

    fs::path task_path (const Options &o, int task)
    {
        if (task < 1 || task > 8)
            throw ConfigError ("unknown task id " + std::to_string (task) + " (expected 1..8)");
        return fs::path (o.data_dir) / "tasks" / ("task" + std::to_string (task) + ".json");
    }

    Scene load_input_scene (const Options &o)
    {
        if (!o.scene.empty ())
            return load_scene (o.scene);
        if (o.task != 0)
            return load_scene (task_path (o, o.task).string ());
        throw ConfigError ("one of --scene or --task is required");
    }

    std::string static_table_path (const Options &o)
    {
        return o.static_table.empty () ? (fs::path (o.data_dir) / "data" / "static_table.json").string () : o.static_table;
    }

    /// Pipeline settings: defaults and --lambda, overridden by the optional --config file.
    PipelineConfig pipeline_config (const Options &o, FailureModel *failure = nullptr)
    {
        PipelineConfig cfg;
        if (o.oracle == "static")
            cfg.oracle.backend = OracleBackend::Static;
        else if (o.oracle == "replay")
            cfg.oracle.backend = OracleBackend::Replay;
        else if (o.oracle == "http")
            cfg.oracle.backend = OracleBackend::Http;
        else
            throw ConfigError ("unknown oracle backend: " + o.oracle);
        cfg.planner.lambda = o.lambda;
        if (!o.config.empty ())
        {
            nlohmann::json j;
            try
            {
                j = nlohmann::json::parse (read_file (o.config));
                if (j.contains ("oracle"))
                {
                    const auto &oj = j["oracle"];
                    cfg.oracle.model = oj.value ("model", cfg.oracle.model);
                    cfg.oracle.temperature = oj.value ("temperature", cfg.oracle.temperature);
                    cfg.oracle.top_p = oj.value ("top_p", cfg.oracle.top_p);
                    cfg.oracle.max_length = oj.value ("max_length", cfg.oracle.max_length);
                    cfg.oracle.frequency_penalty = oj.value ("frequency_penalty", cfg.oracle.frequency_penalty);
                    cfg.oracle.presence_penalty = oj.value ("presence_penalty", cfg.oracle.presence_penalty);
                    cfg.oracle.max_retry = oj.value ("max_retry", cfg.oracle.max_retry);
                    cfg.oracle.timeout = oj.value ("timeout", cfg.oracle.timeout);
                }
                if (j.contains ("sampler"))
                {
                    const auto &sj = j["sampler"];
                    const double sigma = sj.value ("sigma", 0.0);
                    if (sigma > 0.0)
                        cfg.sampler.covariance = {sigma * sigma, 0.0, sigma * sigma};
                    cfg.sampler.candidates = sj.value ("candidates", cfg.sampler.candidates);
                    cfg.sampler.max_tries_per_object = sj.value ("max_tries_per_object", cfg.sampler.max_tries_per_object);
                }
                if (j.contains ("planner"))
                {
                    const auto &pj = j["planner"];
                    cfg.planner.lambda = pj.value ("lambda", cfg.planner.lambda);
                    cfg.planner.pose_spacing = pj.value ("pose_spacing", cfg.planner.pose_spacing);
                    cfg.planner.standoff_margin = pj.value ("standoff_margin", cfg.planner.standoff_margin);
                }
                cfg.resolution = j.value ("resolution", cfg.resolution);
                if (failure && j.contains ("failure"))
                {
                    const auto &fj = j["failure"];
                    failure->nav_fail_base = fj.value ("nav_fail_base", failure->nav_fail_base);
                    failure->nav_fail_near_obstacle = fj.value ("nav_fail_near_obstacle", failure->nav_fail_near_obstacle);
                    failure->clearance = fj.value ("clearance", failure->clearance);
                    failure->manip_fail_slope = fj.value ("manip_fail_slope", failure->manip_fail_slope);
                    failure->drop_sigma = fj.value ("drop_sigma", failure->drop_sigma);
                    failure->retry_limit = fj.value ("retry_limit", failure->retry_limit);
                    failure->replan_time = fj.value ("replan_time", failure->replan_time);
                }
            }
            catch (const nlohmann::json::exception &e)
            {
                throw ConfigError ("config " + o.config + ": " + e.what ());
            }
        }
        return cfg;
    }

    ModelFactory static_factory (const Options &o)
    {
        auto table = std::make_shared<StaticTable> (StaticTable::load (static_table_path (o)));
        return [table] { return std::make_unique<StaticBackend> (*table); };
    }

    ModelFactory model_factory (const Options &o, const PipelineConfig &cfg)
    {
        switch (cfg.oracle.backend)
        {
        case OracleBackend::Static: return static_factory (o);
        case OracleBackend::Replay:
        {
            if (o.replay.empty ())
                throw ConfigError ("--oracle replay needs --replay <file>");
            auto responses = std::make_shared<ReplayBackend> (ReplayBackend::load (o.replay));
            return [responses] { return std::make_unique<ReplayBackend> (*responses); };
        }
        case OracleBackend::Http:
        {
            const OracleConfig oc = cfg.oracle;
            return [oc] { return std::make_unique<HttpBackend> (HttpBackend::from_env (oc)); };
        }
        }
        throw ConfigError ("unknown oracle backend");
    }

    RelationSet read_relations (const std::string &path)
    {
        const std::string text = read_file (path);
        const auto first = text.find_first_not_of (" \t\r\n");
        if (first == std::string::npos)
            return {};
        if (text[first] == '{')
            return parse_json_lines (text);
        return parse_place_lines (text).relations;
    }

    int cmd_check (const Options &o)
    {
        if (o.relations.empty ())
            throw ConfigError ("check needs a relations file");
        const RelationSet rs = read_relations (o.relations);
        const ConsistencyVerdict v = check_consistency (rs);
        if (v.consistent)
        {
            std::cout << "Consistent\n";
            return kOk;
        }
        std::cout << "Inconsistent: " << v.conflict->explanation << "\n";
        return kInconsistent;
    }

    int cmd_plan (const Options &o)
    {
        const Scene scene = load_input_scene (o);
        const PipelineConfig cfg = pipeline_config (o);
        const auto model = model_factory (o, cfg) ();
        const PipelineResult r = run_pipeline (scene, *model, cfg, o.seed);
        nlohmann::json j = plan_to_json (r.plan);
        nlohmann::json rels = nlohmann::json::array ();
        for (const auto &rel : r.arrangement.relations ().relations ())
            rels.push_back (relation_to_json (rel));
        j["relations"] = rels;
        j["oracle_attempts"] = r.arrangement.generation.attempts;
        const fs::path out (o.out);
        write_file (out / "plan.json", j.dump (2) + "\n");
        write_file (out / "layout.svg", render_svg (scene, &r.plan.configuration, &r.plan));
        std::cout << "plan: " << r.plan.steps.size () << " steps, utility " << r.plan.utility << ", cost " << r.plan.cost << " s\n";
        for (const auto &s : r.plan.steps)
            std::cout << "  " << s.object << " -> (" << s.target.position.x << ", " << s.target.position.y << ") from "
                      << s.place.side << " side\n";
        std::cout << "wrote " << (out / "plan.json").string () << " and " << (out / "layout.svg").string () << "\n";
        return kOk;
    }

    nlohmann::json outcome_to_json (const Outcome &oc)
    {
        nlohmann::json placements = nlohmann::json::object ();
        for (const auto &[name, p] : oc.final_placements)
            placements[name] = {p.x, p.y};
        return {{"success_per_object", oc.success_per_object},
                {"final_placements", placements},
                {"exec_time", oc.exec_time},
                {"semantic_score", oc.semantic_score},
                {"all_present", oc.all_present},
                {"nav_failures", oc.nav_failures},
                {"manip_failures", oc.manip_failures}};
    }

    int cmd_simulate (const Options &o)
    {
        const Scene scene = load_input_scene (o);
        FailureModel fm;
        const PipelineConfig cfg = pipeline_config (o, &fm);
        fm.seed = derive_seed (o.seed, "exec");
        TaskMotionPlan plan;
        if (!o.plan.empty ())
            plan = plan_from_json (nlohmann::json::parse (read_file (o.plan)));
        else
        {
            const auto model = model_factory (o, cfg) ();
            plan = run_pipeline (scene, *model, cfg, o.seed).plan;
        }
        const auto ref_model = static_factory (o) ();
        const RelationSet reference = reference_relations (scene, *ref_model, cfg.oracle);
        const Outcome oc = execute (plan, scene, fm, reference);
        const fs::path out (o.out);
        write_file (out / "outcome.json", outcome_to_json (oc).dump (2) + "\n");
        std::cout << "semantic_score " << oc.semantic_score << ", all_present " << (oc.all_present ? "yes" : "no") << ", exec_time "
                  << oc.exec_time << " s (plan cost " << plan.cost << " s)\n";
        return kOk;
    }

    int cmd_bench (const Options &o)
    {
        BenchmarkConfig bc;
        bc.pipeline = pipeline_config (o, &bc.failure);
        bc.trials = o.trials;
        bc.seed = o.seed;
        bc.randomize_chair = !o.fixed_chair;
        bc.methods.clear ();
        for (const auto &m : split_csv (o.methods))
        {
            const auto method = method_from_string (m);
            if (!method)
                throw ConfigError ("unknown method: " + m);
            bc.methods.push_back (*method);
        }
        if (bc.methods.empty ())
            throw ConfigError ("no methods selected");
        bc.oracle = model_factory (o, bc.pipeline);
        bc.reference = static_factory (o);
        std::vector<BenchmarkTask> tasks;
        for (const auto &t : split_csv (o.tasks))
        {
            int id = 0;
            try
            {
                id = std::stoi (t);
            }
            catch (const std::exception &)
            {
                throw ConfigError ("bad task id: " + t);
            }
            tasks.push_back ({id, load_scene (task_path (o, id).string ())});
        }
        const Report report = run_benchmark (tasks, bc, o.jobs);
        const fs::path out (o.out);
        write_file (out / "report.json", report_to_json (report).dump (2) + "\n");
        write_file (out / "report.csv", report_to_csv (report));
        write_file (out / "summary.dat", report_summary (report));
        std::cout << std::left << std::setw (10) << "method" << std::right << std::setw (12) << "score" << std::setw (10) << "+-"
                  << std::setw (10) << "present" << std::setw (12) << "time (s)" << std::setw (10) << "+-" << "\n";
        std::cout << std::fixed << std::setprecision (3);
        for (const auto &a : report.aggregates)
            if (a.task == 0)
                std::cout << std::left << std::setw (10) << a.method << std::right << std::setw (12) << a.score_mean << std::setw (10)
                          << a.score_stderr << std::setw (10) << a.present_rate << std::setw (12) << a.time_mean << std::setw (10)
                          << a.time_stderr << "\n";
        std::cout << report.rows.size () << " rows in " << std::setprecision (1) << report.wall_seconds << " s; wrote "
                  << (out / "report.json").string () << "\n";
        return kOk;
    }

    int cmd_render (const Options &o)
    {
        const Scene scene = load_input_scene (o);
        std::optional<TaskMotionPlan> plan;
        if (!o.plan.empty ())
            plan = plan_from_json (nlohmann::json::parse (read_file (o.plan)));
        const std::string svg = render_svg (scene, plan ? &plan->configuration : nullptr, plan ? &*plan : nullptr);
        fs::path out (o.out);
        if (out.extension () != ".svg")
            out /= "layout.svg";
        write_file (out, svg);
        std::cout << "wrote " << out.string () << "\n";
        return kOk;
    }
} // namespace

int main (int argc, char **argv)
{
    CLI::App app{"Tabletop object rearrangement planner"};
    app.require_subcommand (1);
    Options o;

    auto scene_flags = [&o] (CLI::App *c) {
        c->add_option ("--scene", o.scene, "Scene JSON file");
        c->add_option ("--task", o.task, "Fixture task id (1..8)");
        c->add_option ("--data-dir", o.data_dir, "Directory holding tasks/ and data/");
    };
    auto oracle_flags = [&o] (CLI::App *c) {
        c->add_option ("--oracle", o.oracle, "Oracle backend")->check (CLI::IsMember ({"static", "replay", "http"}));
        c->add_option ("--static-table", o.static_table, "Static oracle table (JSON)");
        c->add_option ("--replay", o.replay, "Replay fixture (JSON array of responses)");
        c->add_option ("--seed", o.seed, "Root random seed");
        c->add_option ("--lambda", o.lambda, "Cost weight in the plan utility");
        c->add_option ("--config", o.config, "JSON file overriding oracle/sampler/planner/failure settings");
    };

    auto *check = app.add_subcommand ("check", "Check a relations file for logical consistency");
    check->add_option ("relations", o.relations, "Relations file (JSON lines or Place-lines)")->required ();

    auto *plan = app.add_subcommand ("plan", "Generate an arrangement and a task-motion plan");
    scene_flags (plan);
    oracle_flags (plan);
    plan->add_option ("--out", o.out, "Output directory");

    auto *sim = app.add_subcommand ("simulate", "Plan (or load a plan) and execute it under the failure model");
    scene_flags (sim);
    oracle_flags (sim);
    sim->add_option ("--plan", o.plan, "Existing plan.json to execute");
    sim->add_option ("--out", o.out, "Output directory");

    auto *bench = app.add_subcommand ("bench", "Run the benchmark over fixture tasks and methods");
    bench->add_option ("--data-dir", o.data_dir, "Directory holding tasks/ and data/");
    oracle_flags (bench);
    bench->add_option ("--trials", o.trials, "Trials per task and method")->check (CLI::PositiveNumber);
    bench->add_option ("--methods", o.methods, "Comma-separated subset of llm-grop,latp,tpra,grop");
    bench->add_option ("--tasks", o.tasks, "Comma-separated task ids");
    bench->add_option ("--jobs", o.jobs, "Worker threads");
    bench->add_flag ("--fixed-chair", o.fixed_chair, "Keep each fixture's chair where it is");
    bench->add_option ("--out", o.out, "Output directory");

    auto *render = app.add_subcommand ("render", "Render a scene (and optional plan) as SVG");
    scene_flags (render);
    render->add_option ("--plan", o.plan, "plan.json to draw");
    render->add_option ("--out", o.out, "Output file (.svg) or directory");

    try
    {
        app.parse (argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit (e);
        return rc == 0 ? kOk : kFailure;
    }

    try
    {
        if (*check)
            return cmd_check (o);
        if (*plan)
            return cmd_plan (o);
        if (*sim)
            return cmd_simulate (o);
        if (*bench)
            return cmd_bench (o);
        if (*render)
            return cmd_render (o);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what () << "\n";
        return kFailure;
    }
    return kFailure;
}
