#include "polysched/instance.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace polysched {

using nlohmann::json;

std::string to_string(Family f) {
    switch (f) {
        case Family::multidim: return "multidim";
        case Family::all_or_nothing: return "all_or_nothing";
        case Family::unrelated: return "unrelated";
        case Family::broadcast: return "broadcast";
        case Family::tree_lb: return "tree_lb";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "multidim") return Family::multidim;
    if (s == "all_or_nothing") return Family::all_or_nothing;
    if (s == "unrelated") return Family::unrelated;
    if (s == "broadcast") return Family::broadcast;
    if (s == "tree_lb") return Family::tree_lb;
    throw ParseError("unknown family '" + s + "'");
}

int Instance::dimension() const {
    if (family == Family::multidim || family == Family::all_or_nothing)
        return static_cast<int>(capacities.size());
    return machines;
}

const Job& Instance::job(JobId id) const {
    for (const Job& j : jobs)
        if (j.id == id) return j;
    throw ValidationError("no job with id " + std::to_string(id));
}

bool Instance::has_job(JobId id) const {
    for (const Job& j : jobs)
        if (j.id == id) return true;
    return false;
}

int Instance::global_rank(JobId id) const {
    for (size_t i = 0; i < jobs.size(); ++i)
        if (jobs[i].id == id) return static_cast<int>(i) + 1;
    throw ValidationError("no job with id " + std::to_string(id));
}

double Instance::total_weight() const {
    double s = 0;
    for (const Job& j : jobs) s += j.weight;
    return s;
}

double Instance::total_work() const {
    double s = 0;
    for (const Job& j : jobs) s += j.size;
    return s;
}

void Instance::validate() {
    // Release order with id tie-break defines the global rank.
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        if (a.release != b.release) return a.release < b.release;
        return a.id < b.id;
    });
    for (size_t i = 1; i < jobs.size(); ++i)
        if (jobs[i].id == jobs[i - 1].id ||
            std::any_of(jobs.begin(), jobs.begin() + static_cast<long>(i),
                        [&](const Job& j) { return j.id == jobs[i].id; }))
            throw ValidationError("duplicate job id " + std::to_string(jobs[i].id));

    const int dim = dimension();
    if (dim <= 0) throw ValidationError("instance has no resources/machines");
    for (double c : capacities)
        if (!(c > 0) || !std::isfinite(c))
            throw ValidationError("capacities must be strictly positive");

    for (const Job& j : jobs) {
        const std::string who = "job " + std::to_string(j.id);
        if (!(j.weight > 0) || !std::isfinite(j.weight))
            throw ValidationError(who + ": weight must be positive");
        if (!(j.size > 0) || !std::isfinite(j.size))
            throw ValidationError(who + ": size must be positive");
        if (!(j.release >= 0) || !std::isfinite(j.release))
            throw ValidationError(who + ": release must be nonnegative");
        if (static_cast<int>(j.payload.size()) != dim)
            throw ValidationError(who + ": payload dimension " +
                                  std::to_string(j.payload.size()) + " != " +
                                  std::to_string(dim));
        bool any_positive = false;
        for (double v : j.payload) {
            if (!(v >= 0) || !std::isfinite(v))
                throw ValidationError(who + ": payload entries must be nonnegative");
            any_positive |= v > 0;
        }
        if (!any_positive)
            throw ValidationError(who + ": payload has no positive entry; job can never run");
    }

    feasible_sets.clear();
    if (family == Family::all_or_nothing) {
        if (jobs.size() > 15)
            throw ValidationError("all_or_nothing capped at n <= 15 (feasible sets are enumerated)");
        std::vector<JobId> ids;
        std::vector<std::vector<double>> demands;
        for (const Job& j : jobs) {
            ids.push_back(j.id);
            demands.push_back(j.payload);
        }
        feasible_sets = enumerate_feasible_sets(ids, demands, capacities);
    }
}

std::vector<std::vector<JobId>> enumerate_feasible_sets(
    const std::vector<JobId>& ids,
    const std::vector<std::vector<double>>& demands,
    const std::vector<double>& capacities) {
    const size_t n = ids.size();
    if (n > 15) throw ValidationError("feasible-set enumeration capped at n <= 15");
    std::vector<std::vector<JobId>> out;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<double> used(capacities.size(), 0.0);
        bool ok = true;
        for (size_t i = 0; i < n && ok; ++i) {
            if (!(mask & (1u << i))) continue;
            for (size_t d = 0; d < capacities.size(); ++d) {
                used[d] += demands[i][d];
                if (used[d] > capacities[d] + 1e-12) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        std::vector<JobId> set;
        for (size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) set.push_back(ids[i]);
        out.push_back(std::move(set));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

Instance gen_family(Family family, const GenParams& p, uint64_t seed) {
    if (p.n < 1) throw ValidationError("gen_family: n must be >= 1");
    if (p.m < 1) throw ValidationError("gen_family: m must be >= 1");
    if (family == Family::all_or_nothing && p.n > 15)
        throw ValidationError("gen_family: all_or_nothing capped at n <= 15");
    if (family == Family::tree_lb)
        throw ValidationError("gen_family: tree_lb instances come from gen_lower_bound_tree");

    Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(family) + 1)));
    Instance inst;
    inst.family = family;
    if (family == Family::multidim || family == Family::all_or_nothing) {
        for (int d = 0; d < p.m; ++d) inst.capacities.push_back(rng.uniform(1.0, 2.0));
    } else {
        inst.machines = p.m;
    }

    for (int i = 0; i < p.n; ++i) {
        Job j;
        j.id = i + 1;
        j.weight = p.unit_weights ? 1.0 : rng.log_uniform(p.weight_lo, p.weight_hi);
        j.size = rng.log_uniform(p.size_lo, p.size_hi);
        j.release = p.release_span > 0 ? rng.uniform(0.0, p.release_span) : 0.0;
        j.payload.resize(static_cast<size_t>(p.m));
        bool any = false;
        for (int d = 0; d < p.m; ++d) {
            double v = 0.0;
            if (is_lifted_family(family)) {
                if (rng.uniform() >= p.zero_prob) v = rng.uniform(0.2, 2.5);
            } else {
                if (rng.uniform() >= p.zero_prob) v = rng.uniform(0.1, 1.0);
            }
            j.payload[static_cast<size_t>(d)] = v;
            any |= v > 0;
        }
        if (!any)
            j.payload[static_cast<size_t>(rng.uniform_int(0, p.m - 1))] =
                is_lifted_family(family) ? rng.uniform(0.2, 2.5) : rng.uniform(0.1, 1.0);
        inst.jobs.push_back(std::move(j));
    }

    // all_or_nothing: demands are scaled so singletons always fit and the
    // feasible collection is nontrivial.
    if (family == Family::all_or_nothing) {
        for (Job& j : inst.jobs)
            for (size_t d = 0; d < j.payload.size(); ++d)
                j.payload[d] = std::min(j.payload[d], inst.capacities[d]);
    }

    inst.metadata["generator"] = "gen_family/" + to_string(family);
    inst.metadata["seed"] = std::to_string(seed);
    inst.validate();
    return inst;
}

Instance gen_flowtime_concat(const Instance& base, int copies, double gap) {
    if (copies < 1) throw ValidationError("gen_flowtime_concat: copies must be >= 1");
    if (base.family != Family::unrelated && base.family != Family::tree_lb)
        throw ValidationError("gen_flowtime_concat: base family must be unrelated (or tree_lb D=1)");
    for (const Job& j : base.jobs)
        if (j.release != 0.0)
            throw ValidationError("gen_flowtime_concat: base releases must all be 0");

    Instance out;
    out.family = base.family;
    out.machines = base.machines;
    out.metadata = base.metadata;
    out.metadata["concat_copies"] = std::to_string(copies);
    out.metadata["concat_gap"] = std::to_string(gap);
    JobId next_id = 1;
    for (int c = 0; c < copies; ++c) {
        for (const Job& j : base.jobs) {
            Job k = j;
            k.id = next_id++;
            k.release = gap * c;
            out.jobs.push_back(std::move(k));
        }
    }
    out.validate();
    return out;
}

namespace {

double require_finite_number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ParseError(what + " must be a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(what + " must be finite (no NaN/inf)");
    return x;
}

}  // namespace

Instance load_instance_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("instance document must be an object");
    if (!doc.contains("family")) throw ParseError("missing 'family'");
    if (!doc.contains("jobs") || !doc["jobs"].is_array())
        throw ParseError("missing 'jobs' array");

    Instance inst;
    inst.family = family_from_string(doc["family"].get<std::string>());

    if (inst.family == Family::multidim || inst.family == Family::all_or_nothing) {
        if (!doc.contains("capacities") || !doc["capacities"].is_array())
            throw ParseError("family " + to_string(inst.family) + " needs a 'capacities' array");
        for (const auto& c : doc["capacities"])
            inst.capacities.push_back(require_finite_number(c, "capacity"));
    } else {
        if (!doc.contains("capacities"))
            throw ParseError("family " + to_string(inst.family) + " needs 'capacities' (machine count)");
        const auto& c = doc["capacities"];
        if (c.is_number_integer())
            inst.machines = c.get<int>();
        else if (c.is_array())
            inst.machines = static_cast<int>(c.size());
        else
            throw ParseError("'capacities' must be a machine count for this family");
    }

    for (const auto& jj : doc["jobs"]) {
        Job j;
        if (!jj.contains("id") || !jj["id"].is_number_integer())
            throw ParseError("job without integer 'id'");
        j.id = jj["id"].get<int>();
        const std::string who = "job " + std::to_string(j.id);
        j.weight = require_finite_number(jj.value("weight", json(1.0)), who + " weight");
        j.size = require_finite_number(jj.value("size", json(1.0)), who + " size");
        j.release = require_finite_number(jj.value("release", json(0.0)), who + " release");
        if (!jj.contains("payload") || !jj["payload"].is_array())
            throw ParseError(who + ": missing 'payload' array");
        for (const auto& v : jj["payload"])
            j.payload.push_back(require_finite_number(v, who + " payload entry"));
        inst.jobs.push_back(std::move(j));
    }

    if (doc.contains("metadata")) {
        for (auto it = doc["metadata"].begin(); it != doc["metadata"].end(); ++it)
            inst.metadata[it.key()] =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }

    inst.validate();
    return inst;
}

Instance load_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid instance document: ") + e.what());
    }
    return load_instance_json(doc);
}

Instance load_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_instance(ss.str());
}

std::string emit_instance(const Instance& inst) {
    json doc;
    doc["family"] = to_string(inst.family);
    if (inst.family == Family::multidim || inst.family == Family::all_or_nothing)
        doc["capacities"] = inst.capacities;
    else
        doc["capacities"] = inst.machines;
    doc["jobs"] = json::array();
    for (const Job& j : inst.jobs) {
        json jj;
        jj["id"] = j.id;
        jj["weight"] = j.weight;
        jj["size"] = j.size;
        jj["release"] = j.release;
        jj["payload"] = j.payload;
        doc["jobs"].push_back(jj);
    }
    doc["metadata"] = inst.metadata;
    return doc.dump(2) + "\n";
}

void save_instance_file(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write instance file '" + path + "'");
    out << emit_instance(inst);
}

}  // namespace polysched
