// bcmer: collect experience, condense it to boundary points, fit students,
// evaluate and plot.

#include <bcmer/bcmer.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

using namespace bcmer;
namespace fs = std::filesystem;

namespace
{

RngSeed default_seed()
{
	if(char const* s = std::getenv("BCMER_SEED"); s && *s)
		return text::parse_uint(s);
	return 0;
}

/// Writes through a temporary file so the target only appears once
/// complete.
template<typename Fn>
void write_file(std::string const& path, Fn&& fn, std::ios::openmode mode = std::ios::out)
{
	auto const tmp = path + ".tmp";
	{
		std::ofstream os(tmp, mode | std::ios::trunc);
		if(!os)
			throw Error("cannot open '" + path + "' for writing");
		fn(os);
		os.flush();
		if(!os)
		{
			os.close();
			fs::remove(tmp);
			throw Error("write to '" + path + "' failed");
		}
	}
	fs::rename(tmp, path);
}

std::ifstream open_input(std::string const& path)
{
	std::ifstream is(path);
	if(!is)
		throw Error("cannot open '" + path + "'");
	return is;
}

ExperiencePool load_pool(std::string const& path)
{
	auto is = open_input(path);
	return read_pool(is);
}

using AnyModel = std::variant<NearestBoundaryModel, DecisionTreeModel>;

AnyModel load_model(std::string const& path)
{
	auto is = open_input(path);
	std::string header;
	if(!std::getline(is, header))
		throw FormatError("empty model file '" + path + "'");
	auto h = text::trim(header);
	if(h.starts_with("#nbmodel"))
		return read_model_body(is, h);
	if(h.starts_with("#tree"))
		return read_tree_body(is, h);
	throw FormatError("'" + path + "' is not a model file");
}

Policy model_policy(AnyModel const& m)
{
	if(auto nb = std::get_if<NearestBoundaryModel>(&m))
		return as_policy(*nb, "bcmer-" + std::string(to_string(nb->backend())));
	auto const& tree = std::get<DecisionTreeModel>(m);
	return as_policy(tree, "dt-" + std::string(to_string(tree.criterion())) + "-l" + std::to_string(tree.max_depth()));
}

void warn_single_action(ExperiencePool const& pool)
{
	for(std::size_t i = 1; i < pool.size(); ++i)
		if(pool.action(i) != pool.action(0))
			return;
	std::cerr << "warning: pool holds a single action; every point is kept\n";
}

StateVector parse_state(std::string const& s)
{
	StateVector v;
	for(auto f : text::split(s, ','))
		v.push_back(text::parse_double(f));
	return v;
}

struct TeacherFlags
{
	std::string kind = "scripted";
	std::string command;
	std::size_t qlearn_episodes = QTrainingConfig{}.episodes;

	void add(CLI::App* app)
	{
		app->add_option("--teacher", kind, "scripted, qlearn or external")
			->check(CLI::IsMember({"scripted", "qlearn", "external"}))
			->capture_default_str();
		app->add_option("--teacher-command", command, "Shell command for an external teacher");
		app->add_option("--qlearn-episodes", qlearn_episodes, "Training episodes for a qlearn teacher")
			->capture_default_str();
	}

	TeacherSpec spec() const
	{
		TeacherSpec t;
		if(kind == "qlearn")
		{
			t.kind = TeacherKind::QLearn;
			t.qlearn.episodes = qlearn_episodes;
		}
		else if(kind == "external")
		{
			if(command.empty())
				throw ValueError("--teacher external needs --teacher-command");
			t.kind = TeacherKind::External;
			t.command = command;
		}
		return t;
	}
};

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Boundary experience retention for interpretable policy distillation"};
	app.require_subcommand(1);
	app.set_version_flag("--version", "bcmer 0.1.0");

	RngSeed seed = 0;
	try
	{
		seed = default_seed();
	}
	catch(std::exception const& e)
	{
		std::cerr << "error: BCMER_SEED: " << e.what() << '\n';
		return 2;
	}

	// collect
	auto* collect_cmd = app.add_subcommand("collect", "Run a teacher and record (state, action) pairs");
	std::string env_name;
	std::size_t n = 0;
	std::string out;
	TeacherFlags teacher;
	collect_cmd->add_option("--env", env_name, "Environment name")->required();
	collect_cmd->add_option("--n", n, "Number of raw experiences")->required();
	collect_cmd->add_option("--seed", seed, "Seed (default: BCMER_SEED or 0)");
	collect_cmd->add_option("-o,--output", out, "Pool file to write")->required();
	teacher.add(collect_cmd);

	// condense
	auto* condense_cmd = app.add_subcommand("condense", "Keep only boundary experiences");
	std::string pool_path, result_path;
	bool minmax = false;
	unsigned workers = 0;
	condense_cmd->add_option("--pool", pool_path, "Input pool file")->required();
	condense_cmd->add_option("-o,--output", out, "Condensed pool file")->required();
	condense_cmd->add_option("--result", result_path, "Also write the per-point classification");
	condense_cmd->add_flag("--minmax", minmax, "Classify on min-max scaled states");
	condense_cmd->add_option("--workers", workers, "Threads (0 = all cores)");

	// fit
	auto* fit_cmd = app.add_subcommand("fit", "Fit a student model to a pool");
	std::string model_kind = "nb", backend_name = "kdtree", criterion_name = "gini";
	std::size_t max_depth = 5;
	fit_cmd->add_option("--pool", pool_path, "Training pool file")->required();
	fit_cmd->add_option("-o,--output", out, "Model file")->required();
	fit_cmd->add_option("--model", model_kind, "nb (nearest boundary) or tree")
		->check(CLI::IsMember({"nb", "tree"}))
		->capture_default_str();
	fit_cmd->add_option("--backend", backend_name, "brute, kdtree or balltree")->capture_default_str();
	fit_cmd->add_option("--criterion", criterion_name, "Tree split criterion")->capture_default_str();
	fit_cmd->add_option("--max-depth", max_depth, "Tree depth limit")->capture_default_str();

	// predict
	auto* predict_cmd = app.add_subcommand("predict", "Predict the action for one state");
	std::string model_path, state_str;
	predict_cmd->add_option("--model", model_path, "Model file")->required();
	predict_cmd->add_option("--state", state_str, "Comma-separated state, e.g. --state=-5,0")->required();

	// evaluate
	auto* eval_cmd = app.add_subcommand("evaluate", "Similarity and return of a student against a teacher");
	std::string student_path = "teacher";
	std::size_t episodes = 200;
	std::string raw_path;
	eval_cmd->add_option("--env", env_name, "Environment name")->required();
	eval_cmd->add_option("--student", student_path, "Model file, or 'teacher' for self-evaluation")
		->capture_default_str();
	eval_cmd->add_option("--episodes", episodes, "Evaluation episodes")->capture_default_str();
	eval_cmd->add_option("--seed", seed, "Seed (default: BCMER_SEED or 0)");
	eval_cmd->add_option("--raw-pool", raw_path, "Raw pool, to report the retained fraction of the student's pool");
	eval_cmd->add_option("-o,--output", out, "Also write the report to this file");
	teacher.add(eval_cmd);

	// suite
	auto* suite_cmd = app.add_subcommand("suite", "Run the experiment grid and write CSV and summary reports");
	std::string config_path;
	std::map<std::string, std::string> overrides;
	suite_cmd->add_option("--config", config_path, "key=value config file");
	for(auto const& key : RunConfig::known_keys())
	{
		std::string flag = "--" + key;
		for(auto& c : flag)
			if(c == '_')
				c = '-';
		suite_cmd->add_option_function<std::string>(
			flag, [&overrides, key](std::string const& v) { overrides[key] = v; }, "Override '" + key + "'");
	}

	// visualize
	auto* viz_cmd = app.add_subcommand("visualize", "Emit an SVG scatter of a 2-D pool and/or a PPM decision map");
	std::string svg_path, ppm_path, bounds_env;
	bool classify = false;
	int width = 400, height = 400;
	viz_cmd->add_option("--pool", pool_path, "2-D pool for the scatter plot");
	viz_cmd->add_flag("--classify", classify, "Mark interior points hollow");
	viz_cmd->add_option("--svg", svg_path, "Scatter output file");
	viz_cmd->add_option("--model", model_path, "Model for the decision map");
	viz_cmd->add_option("--ppm", ppm_path, "Decision map output file");
	viz_cmd->add_option("--env", bounds_env, "Use this environment's declared state bounds for the map");
	viz_cmd->add_option("--width", width, "Map width in cells")->capture_default_str();
	viz_cmd->add_option("--height", height, "Map height in cells")->capture_default_str();

	CLI11_PARSE(app, argc, argv);

	try
	{
		if(*collect_cmd)
		{
			auto env = make_environment(env_name);
			auto policy = make_teacher(teacher.spec(), env_name, seed);
			auto c = collect(*env, policy, n, seed);
			write_file(out, [&](std::ostream& os) { write_pool(os, c.raw); });
			std::cout << "raw " << c.raw.size() << " distinct " << c.pool.size() << " episodes " << c.episodes
			          << '\n';
		}
		else if(*condense_cmd)
		{
			auto raw = load_pool(pool_path);
			auto pool = dedupe(raw);
			if(pool.empty())
				throw EmptyPoolError("pool '" + pool_path + "' has no experiences");
			warn_single_action(pool);
			auto c = condense(minmax ? minmax_scaled(pool) : pool, {workers});
			auto kept = pool.subset(c.result.boundary_indices);
			write_file(out, [&](std::ostream& os) { write_pool(os, kept); });
			if(!result_path.empty())
				write_file(result_path, [&](std::ostream& os) { write_condensation(os, c.result); });
			std::cout << "raw " << raw.size() << " distinct " << pool.size() << " retained "
			          << c.result.boundary_indices.size() << " interior " << c.result.interior_indices.size()
			          << " fraction " << text::format_double(static_cast<double>(kept.size()) /
			                                                 static_cast<double>(raw.size()))
			          << '\n';
		}
		else if(*fit_cmd)
		{
			auto pool = load_pool(pool_path);
			warn_single_action(pool);
			if(model_kind == "nb")
			{
				auto m = fit(std::move(pool), parse_backend(backend_name));
				write_file(out, [&](std::ostream& os) { write_model(os, m); });
				std::cout << "nearest-boundary model backend " << to_string(m.backend()) << " points "
				          << m.pool().size() << '\n';
			}
			else
			{
				auto t = fit_tree(pool, parse_criterion(criterion_name), max_depth);
				write_file(out, [&](std::ostream& os) { write_tree(os, t); });
				std::cout << "tree criterion " << to_string(t.criterion()) << " depth " << t.depth() << " nodes "
				          << t.nodes().size() << '\n';
			}
		}
		else if(*predict_cmd)
		{
			auto m = load_model(model_path);
			auto s = parse_state(state_str);
			if(auto nb = std::get_if<NearestBoundaryModel>(&m))
			{
				auto p = nb->predict(s);
				auto near = nb->pool().state(p.explanation.nearest_index);
				std::cout << "action " << p.action.value << '\n'
				          << "nearest " << p.explanation.nearest_index << " state ";
				for(std::size_t k = 0; k < near.size(); ++k)
					std::cout << (k ? "," : "") << text::format_double(near[k]);
				std::cout << " distance " << text::format_double(p.explanation.nearest_distance) << '\n';
			}
			else
			{
				std::cout << "action " << std::get<DecisionTreeModel>(m).predict(s).value << '\n';
			}
		}
		else if(*eval_cmd)
		{
			auto env = make_environment(env_name);
			auto t = make_teacher(teacher.spec(), env_name, seed);
			std::optional<AnyModel> model;
			if(student_path != "teacher")
				model = load_model(student_path);
			Policy student = model ? model_policy(*model) : t;
			auto sim = similarity_eval(t, student, *env, episodes, seed);
			auto tr = rollout_return(t, *env, episodes, seed);
			auto sr = model ? rollout_return(student, *env, episodes, seed) : tr;
			std::ostringstream rep;
			rep << "#evaluation env=" << env_name << " student=" << student.name() << " episodes=" << episodes
			    << " seed=" << seed << '\n';
			rep << "mae=" << text::format_double(sim.mae) << '\n'
			    << "rmsd=" << text::format_double(sim.rmsd) << '\n'
			    << "acc=" << text::format_double(sim.acc) << '\n'
			    << "episode_mean_acc=" << text::format_double(sim.episode_mean_acc) << '\n'
			    << "decisions=" << sim.n_decisions << '\n'
			    << "teacher_return=" << text::format_double(tr.mean) << '\n'
			    << "student_return=" << text::format_double(sr.mean) << '\n'
			    << "student_return_stddev=" << text::format_double(sr.stddev) << '\n';
			if(!raw_path.empty())
			{
				auto nb = model ? std::get_if<NearestBoundaryModel>(&*model) : nullptr;
				if(!nb)
					throw ValueError("--raw-pool needs a nearest-boundary student");
				rep << "retained_fraction=" << text::format_double(reduction_stats(load_pool(raw_path), nb->pool()))
				    << '\n';
			}
			if(!out.empty())
				write_file(out, [&](std::ostream& os) { os << rep.str(); });
			std::cout << rep.str();
		}
		else if(*suite_cmd)
		{
			// precedence: flags, then config file, then BCMER_SEED, then defaults
			RunConfig cfg;
			cfg.set("seeds", std::to_string(seed));
			if(!config_path.empty())
			{
				auto is = open_input(config_path);
				cfg = RunConfig::parse(is, cfg);
			}
			for(auto const& [k, v] : overrides)
				cfg.set(k, v);
			auto suite = cfg.to_suite();
			auto rows = run_experiment_suite(suite);
			fs::path dir = cfg.get("output");
			fs::create_directories(dir);
			write_file((dir / "report.csv").string(), [&](std::ostream& os) { write_csv(os, rows); });
			write_file((dir / "summary.txt").string(), [&](std::ostream& os) { write_summary(os, rows, cfg.echo()); });
			std::size_t failed = 0;
			for(auto const& r : rows)
				if(!r.error.empty())
				{
					++failed;
					std::cerr << "error: " << r.env << " n=" << r.size << " seed=" << r.seed << ": " << r.error
					          << '\n';
				}
			std::cout << "rows " << rows.size() << " errors " << failed << " written to " << dir.string() << '\n';
			if(failed)
				return 1;
		}
		else if(*viz_cmd)
		{
			if(svg_path.empty() && ppm_path.empty())
				throw ValueError("nothing to draw: give --svg and/or --ppm");
			if(!svg_path.empty())
			{
				if(pool_path.empty())
					throw ValueError("--svg needs --pool");
				auto pool = load_pool(pool_path);
				std::vector<PointClass> classes;
				if(classify)
				{
					if(pool.dim() != 2)
						throw UnsupportedDimensionError("scatter plots need a 2-D pool");
					auto c = condense(pool);
					classes.assign(pool.size(), PointClass::Boundary);
					for(auto i : c.result.interior_indices)
						classes[i] = PointClass::Interior;
				}
				std::ostringstream svg;
				viz::scatter_svg(svg, pool, classes);
				write_file(svg_path, [&](std::ostream& os) { os << svg.str(); });
			}
			if(!ppm_path.empty())
			{
				if(model_path.empty())
					throw ValueError("--ppm needs --model");
				auto m = load_model(model_path);
				auto policy = model_policy(m);
				auto const* nb = std::get_if<NearestBoundaryModel>(&m);
				std::size_t dim = nb ? nb->pool().dim() : std::get<DecisionTreeModel>(m).dim();
				if(dim != 2)
					throw UnsupportedDimensionError("decision maps need a 2-D model");
				viz::PlotArea area;
				if(!bounds_env.empty())
				{
					auto const& b = make_environment(bounds_env)->descriptor().state_bounds;
					if(b.size() != 2)
						throw UnsupportedDimensionError("environment '" + bounds_env + "' is not 2-D");
					area = {b[0], b[1]};
				}
				else if(nb)
					area = viz::extent(nb->pool());
				else
					throw ValueError("a tree model needs --env for the map bounds");
				auto cells = viz::region_grid([&](StateView s) { return policy(s); }, area, width, height);
				write_file(
					ppm_path, [&](std::ostream& os) { viz::write_ppm(os, cells, width, height); },
					std::ios::out | std::ios::binary);
			}
		}
	}
	catch(std::exception const& e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}
