#pragma once

#include <bcmer/condensation.hpp>
#include <bcmer/decision_tree.hpp>
#include <bcmer/environments.hpp>
#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>
#include <bcmer/nearest_boundary.hpp>
#include <bcmer/teachers.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace bcmer
{

/// Agreement between two action sequences. MAE and RMSD treat action ids
/// as integers, so their magnitude depends on how ids are numbered; ACC is
/// the id-independent figure.
struct SimilarityReport
{
	double mae = 0.0;
	double rmsd = 0.0;
	double acc = 0.0;
	std::size_t n_decisions = 0;
	/// Mean of per-episode ACC; equals `acc` for sequence-level reports.
	double episode_mean_acc = 0.0;
};

inline SimilarityReport similarity_metrics(std::span<ActionId const> teacher, std::span<ActionId const> student)
{
	if(teacher.size() != student.size())
		throw LengthError("action sequences differ in length: " + std::to_string(teacher.size()) + " vs " +
		                  std::to_string(student.size()));
	if(teacher.empty())
		throw EmptyError("action sequences are empty");
	double abs_sum = 0.0, sq_sum = 0.0;
	std::size_t hits = 0;
	for(std::size_t i = 0; i < teacher.size(); ++i)
	{
		double const diff = static_cast<double>(teacher[i].value) - static_cast<double>(student[i].value);
		abs_sum += std::abs(diff);
		sq_sum += diff * diff;
		hits += teacher[i] == student[i];
	}
	double const n = static_cast<double>(teacher.size());
	SimilarityReport r;
	r.mae = abs_sum / n;
	r.rmsd = std::sqrt(sq_sum / n);
	r.acc = static_cast<double>(hits) / n;
	r.n_decisions = teacher.size();
	r.episode_mean_acc = r.acc;
	return r;
}

namespace seed_stream
{
inline constexpr std::uint64_t similarity = 0x02;
inline constexpr std::uint64_t rollout = 0x03;
} // namespace seed_stream

/// The teacher drives the environment; at every visited state both the
/// teacher's and the student's choice are recorded.
inline SimilarityReport similarity_eval(Policy const& teacher, Policy const& student, Environment& env,
                                        std::size_t episodes, RngSeed seed)
{
	if(episodes == 0)
		throw ValueError("similarity_eval needs at least one episode");
	std::vector<ActionId> xs, ys;
	double episode_acc_sum = 0.0;
	for(std::size_t ep = 0; ep < episodes; ++ep)
	{
		auto s = env.reset(derive_seed(seed, seed_stream::similarity, ep));
		std::size_t const first = xs.size();
		while(true)
		{
			auto a = teacher(s);
			xs.push_back(a);
			ys.push_back(student(s));
			auto t = env.step(a);
			if(t.episode_over())
				break;
			s = std::move(t.next_state);
		}
		std::size_t hits = 0;
		for(std::size_t i = first; i < xs.size(); ++i)
			hits += xs[i] == ys[i];
		episode_acc_sum += static_cast<double>(hits) / static_cast<double>(xs.size() - first);
	}
	auto r = similarity_metrics(xs, ys);
	r.episode_mean_acc = episode_acc_sum / static_cast<double>(episodes);
	return r;
}

struct RolloutResult
{
	double mean = 0.0;
	double stddev = 0.0;
	std::vector<double> returns;
};

inline RolloutResult rollout_return(Policy const& policy, Environment& env, std::size_t episodes, RngSeed seed)
{
	if(episodes == 0)
		throw ValueError("rollout_return needs at least one episode");
	RolloutResult r;
	r.returns.reserve(episodes);
	for(std::size_t ep = 0; ep < episodes; ++ep)
	{
		auto s = env.reset(derive_seed(seed, seed_stream::rollout, ep));
		double total = 0.0;
		while(true)
		{
			auto t = env.step(policy(s));
			total += t.reward;
			if(t.episode_over())
				break;
			s = std::move(t.next_state);
		}
		r.returns.push_back(total);
	}
	double sum = 0.0;
	for(double v : r.returns)
		sum += v;
	r.mean = sum / static_cast<double>(episodes);
	if(episodes > 1)
	{
		double ss = 0.0;
		for(double v : r.returns)
			ss += (v - r.mean) * (v - r.mean);
		r.stddev = std::sqrt(ss / static_cast<double>(episodes - 1));
	}
	return r;
}

/// |after| / |before|, where every experience of `after` must occur in
/// `before`.
inline double reduction_stats(ExperiencePool const& before, ExperiencePool const& after)
{
	if(before.empty())
		throw EmptyPoolError("reduction_stats: empty reference pool");
	require_same_dim(before.dim(), after.dim());
	std::set<std::pair<StateVector, std::uint32_t>> known;
	for(std::size_t i = 0; i < before.size(); ++i)
	{
		auto s = before.state(i);
		known.emplace(StateVector(s.begin(), s.end()), before.action(i).value);
	}
	for(std::size_t i = 0; i < after.size(); ++i)
	{
		auto s = after.state(i);
		if(!known.contains({StateVector(s.begin(), s.end()), after.action(i).value}))
			throw ContractError("reduced pool holds experience " + std::to_string(i) + " absent from the original");
	}
	return static_cast<double>(after.size()) / static_cast<double>(before.size());
}

inline Policy as_policy(NearestBoundaryModel const& model, std::string name)
{
	return Policy(std::move(name), [&model](StateView s) { return model.predict(s).action; });
}

inline Policy as_policy(DecisionTreeModel const& tree, std::string name)
{
	return Policy(std::move(name), [&tree](StateView s) { return tree.predict(s); });
}

enum class TeacherKind
{
	Scripted,
	QLearn,
	External,
};

struct TeacherSpec
{
	TeacherKind kind = TeacherKind::Scripted;
	QTrainingConfig qlearn;
	std::string command;
};

/// Builds the teacher for one environment. Q-learning teachers are trained
/// here, seeded from `seed`.
inline Policy make_teacher(TeacherSpec const& spec, std::string_view env_name, RngSeed seed)
{
	switch(spec.kind)
	{
	case TeacherKind::Scripted: return scripted_teacher(env_name);
	case TeacherKind::QLearn:
	{
		auto env = make_environment(env_name);
		auto cfg = spec.qlearn;
		cfg.seed = seed;
		return train_q_teacher(*env, default_grid(env_name), cfg).policy();
	}
	case TeacherKind::External:
		return external_teacher(spec.command, make_environment(env_name)->descriptor().action_count);
	}
	throw NameError("unknown teacher kind");
}

struct BaselineSpec
{
	SplitCriterion criterion;
	std::size_t max_depth;

	std::string name() const { return "dt-" + std::string(to_string(criterion)) + "-l" + std::to_string(max_depth); }
};

inline std::vector<BaselineSpec> default_baselines()
{
	return {{SplitCriterion::Entropy, 5}, {SplitCriterion::Entropy, 10}, {SplitCriterion::Gini, 5},
	        {SplitCriterion::Gini, 10}};
}

struct SuiteConfig
{
	std::vector<std::string> envs{"predator-prey"};
	std::vector<std::size_t> sizes{500};
	std::vector<Backend> backends{Backend::Brute, Backend::KDTree, Backend::BallTree};
	std::vector<BaselineSpec> baselines = default_baselines();
	std::vector<RngSeed> seeds{0};
	std::size_t episodes = 200;
	TeacherSpec teacher;
	/// Cells evaluated concurrently; 0 selects hardware concurrency.
	unsigned workers = 1;
};

/// One row of the report grid.
struct CellReport
{
	std::string env;
	std::size_t size = 0;
	RngSeed seed = 0;
	std::string model;
	SimilarityReport similarity;
	double retained_fraction = 1.0;
	/// Retained size over the deduplicated pool, for proposal models.
	double retained_of_distinct = 1.0;
	double mean_return = 0.0;
	double return_stddev = 0.0;
	double teacher_return = 0.0;
	std::size_t episodes = 0;
	std::string error;
};

namespace detail
{

inline std::vector<CellReport> run_cell(SuiteConfig const& cfg, std::string const& env_name, std::size_t size,
                                        RngSeed seed)
{
	std::vector<CellReport> rows;
	auto base = [&](std::string model) {
		CellReport r;
		r.env = env_name;
		r.size = size;
		r.seed = seed;
		r.model = std::move(model);
		r.episodes = cfg.episodes;
		return r;
	};
	try
	{
		auto env = make_environment(env_name);
		auto teacher = make_teacher(cfg.teacher, env_name, seed);
		auto collection = collect(*env, teacher, size, seed);
		auto condensed = condense(collection.pool, {1});
		double const retained = reduction_stats(collection.raw, condensed.pool);

		auto teacher_roll = rollout_return(teacher, *env, cfg.episodes, seed);

		auto evaluate = [&](Policy const& student, CellReport row) {
			row.similarity = similarity_eval(teacher, student, *env, cfg.episodes, seed);
			auto roll = rollout_return(student, *env, cfg.episodes, seed);
			row.mean_return = roll.mean;
			row.return_stddev = roll.stddev;
			row.teacher_return = teacher_roll.mean;
			rows.push_back(std::move(row));
		};

		evaluate(teacher, base("teacher"));

		for(auto backend : cfg.backends)
		{
			auto model = fit(condensed.pool, backend);
			auto row = base("bcmer-" + std::string(to_string(backend)));
			row.retained_fraction = retained;
			row.retained_of_distinct = condensed.result.retained_fraction;
			evaluate(as_policy(model, row.model), std::move(row));
		}

		{
			auto full = fit(collection.pool, Backend::KDTree);
			evaluate(as_policy(full, "nn-full"), base("nn-full"));
		}

		for(auto const& b : cfg.baselines)
		{
			auto tree = fit_tree(collection.raw, b.criterion, b.max_depth);
			evaluate(as_policy(tree, b.name()), base(b.name()));
		}
	}
	catch(std::exception const& e)
	{
		auto row = base("error");
		row.error = e.what();
		rows.push_back(std::move(row));
	}
	return rows;
}

} // namespace detail

/// Collect -> condense -> fit -> evaluate for every (env, size, seed) cell.
/// A failing cell yields a single `error` row; the rest of the grid runs.
/// Output order is by (env, size, seed) then model, independent of
/// scheduling.
inline std::vector<CellReport> run_experiment_suite(SuiteConfig const& cfg)
{
	struct Key
	{
		std::string env;
		std::size_t size;
		RngSeed seed;
	};
	std::vector<Key> keys;
	for(auto const& e : cfg.envs)
		for(auto n : cfg.sizes)
			for(auto s : cfg.seeds)
				keys.push_back({e, n, s});

	std::vector<std::vector<CellReport>> results(keys.size());
	unsigned workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
	workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, keys.size())));
	std::atomic<std::size_t> next{0};
	auto work = [&] {
		for(std::size_t k; (k = next++) < keys.size();)
			results[k] = detail::run_cell(cfg, keys[k].env, keys[k].size, keys[k].seed);
	};
	if(workers <= 1)
	{
		work();
	}
	else
	{
		std::vector<std::jthread> pool;
		for(unsigned w = 0; w < workers; ++w)
			pool.emplace_back(work);
	}

	std::vector<std::size_t> order(keys.size());
	for(std::size_t i = 0; i < order.size(); ++i)
		order[i] = i;
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
		return std::tie(keys[a].env, keys[a].size, keys[a].seed) < std::tie(keys[b].env, keys[b].size, keys[b].seed);
	});
	std::vector<CellReport> out;
	for(auto i : order)
		for(auto& r : results[i])
			out.push_back(std::move(r));
	return out;
}

inline constexpr std::string_view csv_header = "env,size,model,mae,rmsd,acc,retained_fraction,mean_return,seed";

inline void write_csv(std::ostream& os, std::span<CellReport const> rows)
{
	os << csv_header << '\n';
	for(auto const& r : rows)
	{
		os << r.env << ',' << r.size << ',' << r.model << ',';
		if(r.error.empty())
			os << text::format_double(r.similarity.mae) << ',' << text::format_double(r.similarity.rmsd) << ','
			   << text::format_double(r.similarity.acc) << ',' << text::format_double(r.retained_fraction) << ','
			   << text::format_double(r.mean_return);
		else
			os << ",,,,";
		os << ',' << r.seed << '\n';
	}
}

inline void write_summary(std::ostream& os, std::span<CellReport const> rows, std::string_view config_echo)
{
	os << "#summary bcmer experiment suite\n";
	os << "# note: flappy-bird is a simplified artifact-defined variant\n";
	os << "# note: mae/rmsd depend on action id numbering; acc is the primary similarity figure\n";
	os << "# config:\n";
	for(auto line : text::split(config_echo, '\n'))
		if(!line.empty())
			os << "#   " << line << '\n';
	char buf[512];
	for(auto const& r : rows)
	{
		if(!r.error.empty())
		{
			os << r.env << " n=" << r.size << " seed=" << r.seed << " ERROR: " << r.error << '\n';
			continue;
		}
		std::snprintf(buf, sizeof(buf),
		              "%-14s n=%-6zu seed=%-4llu %-16s acc=%.4f mae=%.4f rmsd=%.4f ep_acc=%.4f retained=%.4f "
		              "(distinct %.4f) return=%.3f+-%.3f teacher=%.3f decisions=%zu\n",
		              r.env.c_str(), r.size, static_cast<unsigned long long>(r.seed), r.model.c_str(),
		              r.similarity.acc, r.similarity.mae, r.similarity.rmsd, r.similarity.episode_mean_acc,
		              r.retained_fraction, r.retained_of_distinct, r.mean_return, r.return_stddev, r.teacher_return,
		              r.similarity.n_decisions);
		os << buf;
	}
}

} // namespace bcmer
