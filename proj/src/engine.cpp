#include "polysched/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace polysched {

using nlohmann::json;

double Trace::processed(JobId id, double t) const {
    double done = 0;
    for (const TraceSegment& s : segments) {
        if (s.t0 >= t) break;
        auto it = s.rates.find(id);
        if (it == s.rates.end()) continue;
        done += it->second * speed * (std::min(t, s.t1) - s.t0);
    }
    return done;
}

std::pair<double, std::vector<JobId>> next_completion(
    const std::map<JobId, double>& remaining, const std::map<JobId, double>& rates,
    double speed, double tie_tol) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [id, rem] : remaining) {
        auto it = rates.find(id);
        double rate = it == rates.end() ? 0.0 : it->second;
        if (rate <= 0) continue;
        best = std::min(best, rem / (speed * rate));
    }
    if (!std::isfinite(best))
        throw SimulationError("next_completion: no job makes progress (all rates zero)");
    std::vector<JobId> completing;
    for (const auto& [id, rem] : remaining) {
        auto it = rates.find(id);
        double rate = it == rates.end() ? 0.0 : it->second;
        if (rate <= 0) continue;
        if (rem / (speed * rate) <= best + tie_tol) completing.push_back(id);
    }
    return {best, completing};
}

Trace simulate(const Instance& inst, Scheduler& sched, double speed,
               const SimOptions& opts) {
    if (!(speed >= 1.0)) throw ValidationError("simulate: speed must be >= 1");
    if (!sched.supports(inst.family))
        throw ValidationError("scheduler '" + sched.name() + "' does not support family " +
                              to_string(inst.family));

    Trace tr;
    tr.instance = inst;
    tr.scheduler = sched.name();
    tr.speed = speed;

    // Pending arrivals in release order (the instance is already sorted).
    size_t next_arrival = 0;
    std::map<JobId, double> remaining;
    std::vector<JobView> alive;

    auto release_due = [&](double t) {
        TraceEvent ev;
        ev.time = t;
        while (next_arrival < inst.jobs.size() &&
               inst.jobs[next_arrival].release <= t + opts.tie_tol) {
            const Job& j = inst.jobs[next_arrival++];
            JobView v{j.id, j.weight, j.release, j.payload};
            alive.push_back(v);
            remaining[j.id] = j.size;
            sched.on_arrival(v, t);
            ev.arrivals.push_back(j.id);
        }
        return ev;
    };

    double t = inst.jobs.empty() ? 0.0 : inst.jobs.front().release;
    TraceEvent first = release_due(t);
    if (!first.arrivals.empty()) tr.events.push_back(first);

    int events = 0;
    while (!alive.empty() || next_arrival < inst.jobs.size()) {
        if (++events > opts.max_events)
            throw SimulationError("simulate: event budget exceeded");

        if (alive.empty()) {
            // Gap with nothing alive: jump to the next arrival.
            t = inst.jobs[next_arrival].release;
            tr.events.push_back(release_due(t));
            continue;
        }

        SchedulerView view(inst, t, speed, alive);
        SchedulerDecision dec = sched.decide(view);
        for (const auto& [id, x] : dec.rates)
            if (x < 0) throw SimulationError("scheduler returned a negative rate");

        if (opts.check_decisions) {
            PackingPolytope poly = view.build_alive_polytope();
            FeasibilityReport rep = check_feasible(poly, dec.rates, opts.feasibility_tol);
            if (!rep.feasible)
                throw SimulationError("scheduler '" + sched.name() +
                                      "' returned infeasible rates at t=" + std::to_string(t) +
                                      " (violation " + std::to_string(rep.max_violation) + ")");
        }

        bool any_rate = false;
        for (const JobView& j : alive) {
            auto it = dec.rates.find(j.id);
            if (it != dec.rates.end() && it->second > 0) any_rate = true;
        }

        double until_arrival = next_arrival < inst.jobs.size()
                                   ? inst.jobs[next_arrival].release - t
                                   : std::numeric_limits<double>::infinity();
        if (!any_rate && !std::isfinite(until_arrival))
            throw SimulationError("simulate: livelock, zero rate for all alive jobs and no "
                                  "future arrivals");

        double dt;
        std::vector<JobId> completing;
        if (any_rate) {
            auto [delta, who] = next_completion(remaining, dec.rates, speed, opts.tie_tol);
            dt = delta;
            completing = std::move(who);
        } else {
            dt = until_arrival;
        }
        if (until_arrival < dt - opts.tie_tol) {
            dt = until_arrival;
            completing.clear();
        }

        TraceSegment seg;
        seg.t0 = t;
        seg.t1 = t + dt;
        for (const JobView& j : alive) {
            auto it = dec.rates.find(j.id);
            seg.rates[j.id] = it == dec.rates.end() ? 0.0 : it->second;
        }
        seg.row_duals = dec.row_duals;
        seg.link_duals = dec.link_duals;
        seg.shares = dec.shares;
        seg.has_duals = dec.has_duals;
        tr.segments.push_back(std::move(seg));

        for (const JobView& j : alive) {
            double x = tr.segments.back().rates[j.id];
            remaining[j.id] -= speed * x * dt;
        }
        t += dt;

        TraceEvent ev;
        ev.time = t;
        if (!completing.empty()) {
            // Completions are processed in ascending global rank; each one is
            // reported to the scheduler before the next (Rearrange runs per
            // departure).
            std::sort(completing.begin(), completing.end(), [&](JobId a, JobId b) {
                return inst.global_rank(a) < inst.global_rank(b);
            });
            for (JobId id : completing) {
                remaining.erase(id);
                alive.erase(std::find_if(alive.begin(), alive.end(),
                                         [&](const JobView& v) { return v.id == id; }));
                tr.completion[id] = t;
                sched.on_completion(id, t);
                ev.completions.push_back(id);
            }
        }
        TraceEvent arr = release_due(t);
        ev.arrivals = arr.arrivals;
        if (!ev.arrivals.empty() || !ev.completions.empty()) tr.events.push_back(ev);
    }

    tr.makespan = t;
    return tr;
}

Metrics metrics(const Trace& tr) {
    if (!tr.complete())
        throw ValidationError("metrics: trace is incomplete (" +
                              std::to_string(tr.completion.size()) + "/" +
                              std::to_string(tr.instance.jobs.size()) + " jobs finished)");
    Metrics m;
    for (const Job& j : tr.instance.jobs) {
        double C = tr.completion.at(j.id);
        double F = C - j.release;
        m.completion[j.id] = C;
        m.flow[j.id] = F;
        m.weighted_completion += j.weight * C;
        m.weighted_flow += j.weight * F;
        m.total_flow += F;
        m.makespan = std::max(m.makespan, C);
    }
    return m;
}

namespace {

json row_key_json(const RowKey& k) {
    json o;
    switch (k.kind) {
        case RowKind::resource: o["kind"] = "resource"; break;
        case RowKind::singleton: o["kind"] = "singleton"; break;
        case RowKind::machine: o["kind"] = "machine"; break;
        case RowKind::job_cap: o["kind"] = "job_cap"; break;
        case RowKind::simplex: o["kind"] = "simplex"; break;
    }
    o["ref"] = k.ref;
    return o;
}

RowKey row_key_from_json(const json& o) {
    RowKey k;
    std::string kind = o.at("kind").get<std::string>();
    if (kind == "resource") k.kind = RowKind::resource;
    else if (kind == "singleton") k.kind = RowKind::singleton;
    else if (kind == "machine") k.kind = RowKind::machine;
    else if (kind == "job_cap") k.kind = RowKind::job_cap;
    else if (kind == "simplex") k.kind = RowKind::simplex;
    else throw ParseError("bad row key kind '" + kind + "'");
    k.ref = o.at("ref").get<int>();
    return k;
}

}  // namespace

std::string emit_trace(const Trace& tr) {
    json doc;
    doc["instance"] = json::parse(emit_instance(tr.instance));
    doc["scheduler"] = tr.scheduler;
    doc["speed"] = tr.speed;
    doc["epsilon"] = tr.epsilon;
    doc["makespan"] = tr.makespan;
    doc["completion"] = json::object();
    for (const auto& [id, c] : tr.completion) doc["completion"][std::to_string(id)] = c;
    doc["events"] = json::array();
    for (const TraceEvent& e : tr.events)
        doc["events"].push_back(
            {{"time", e.time}, {"arrivals", e.arrivals}, {"completions", e.completions}});
    doc["segments"] = json::array();
    for (const TraceSegment& s : tr.segments) {
        json seg;
        seg["t0"] = s.t0;
        seg["t1"] = s.t1;
        seg["rates"] = json::object();
        for (const auto& [id, x] : s.rates) seg["rates"][std::to_string(id)] = x;
        if (s.has_duals) {
            seg["row_duals"] = json::array();
            for (const auto& [k, v] : s.row_duals) {
                json o = row_key_json(k);
                o["value"] = v;
                seg["row_duals"].push_back(o);
            }
            seg["link_duals"] = json::object();
            for (const auto& [id, v] : s.link_duals) seg["link_duals"][std::to_string(id)] = v;
        }
        if (!s.shares.empty()) {
            seg["shares"] = json::array();
            for (const AssignmentShare& a : s.shares)
                seg["shares"].push_back({{"job", a.job},
                                         {"machine", a.machine},
                                         {"set_index", a.set_index},
                                         {"share", a.share}});
        }
        doc["segments"].push_back(std::move(seg));
    }
    return doc.dump(2) + "\n";
}

Trace load_trace(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid trace document: ") + e.what());
    }
    Trace tr;
    tr.instance = load_instance_json(doc.at("instance"));
    tr.scheduler = doc.at("scheduler").get<std::string>();
    tr.speed = doc.at("speed").get<double>();
    tr.epsilon = doc.value("epsilon", 0.0);
    tr.makespan = doc.at("makespan").get<double>();
    for (auto it = doc.at("completion").begin(); it != doc.at("completion").end(); ++it)
        tr.completion[std::stoi(it.key())] = it.value().get<double>();
    for (const auto& e : doc.value("events", json::array())) {
        TraceEvent ev;
        ev.time = e.at("time").get<double>();
        for (const auto& a : e.at("arrivals")) ev.arrivals.push_back(a.get<int>());
        for (const auto& c : e.at("completions")) ev.completions.push_back(c.get<int>());
        tr.events.push_back(std::move(ev));
    }
    for (const auto& s : doc.at("segments")) {
        TraceSegment seg;
        seg.t0 = s.at("t0").get<double>();
        seg.t1 = s.at("t1").get<double>();
        for (auto it = s.at("rates").begin(); it != s.at("rates").end(); ++it)
            seg.rates[std::stoi(it.key())] = it.value().get<double>();
        if (s.contains("row_duals")) {
            seg.has_duals = true;
            for (const auto& o : s["row_duals"])
                seg.row_duals.emplace_back(row_key_from_json(o), o.at("value").get<double>());
            for (auto it = s.at("link_duals").begin(); it != s.at("link_duals").end(); ++it)
                seg.link_duals[std::stoi(it.key())] = it.value().get<double>();
        }
        if (s.contains("shares")) {
            for (const auto& o : s["shares"])
                seg.shares.push_back({o.at("job").get<int>(), o.at("machine").get<int>(),
                                      o.at("set_index").get<int>(),
                                      o.at("share").get<double>()});
        }
        tr.segments.push_back(std::move(seg));
    }
    return tr;
}

Trace load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_trace(ss.str());
}

void save_trace_file(const Trace& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace file '" + path + "'");
    out << emit_trace(tr);
}

}  // namespace polysched
