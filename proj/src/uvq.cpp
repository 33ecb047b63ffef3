#include "drp/uvq.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "drp/error.hpp"
#include "drp/parallel.hpp"
#include "drp/tokenize.hpp"

namespace drp {

using json = nlohmann::json;

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

auto feature_order(const DifferenceFeature& f) {
    return std::tie(f.dimension.name, f.dimension.definition, f.description);
}

bool feature_less(const DifferenceFeature& a, const DifferenceFeature& b) {
    if (feature_order(a) != feature_order(b)) return feature_order(a) < feature_order(b);
    return a.evidence.value_or("") < b.evidence.value_or("");
}

}  // namespace

const char* to_string(FeatureCategory c) noexcept {
    switch (c) {
        case FeatureCategory::Writing: return "Writing";
        case FeatureCategory::Emotion: return "Emotion";
        case FeatureCategory::Semantics: return "Semantics";
        case FeatureCategory::Structure: return "Structure";
        case FeatureCategory::Pragmatics: return "Pragmatics";
    }
    return "Writing";
}

FeatureCategory feature_category_from_string(const std::string& name) {
    const auto key = upper(trim(name));
    for (auto c : kAllCategories)
        if (upper(to_string(c)) == key) return c;
    throw OutputParseError(ErrorKind::JudgeParse, "unknown feature category '" + name + "'", name);
}

const char* to_string(UvqAggregation a) noexcept { return a == UvqAggregation::Sum ? "sum" : "union"; }

UvqAggregation uvq_aggregation_from_string(const std::string& name) {
    if (name == "sum") return UvqAggregation::Sum;
    if (name == "union") return UvqAggregation::Union;
    throw Error(ErrorKind::Config, "uvq_aggregation must be 'sum' or 'union', got '" + name + "'");
}

ValidityVerdict parse_judge_output(const std::string& raw) {
    std::map<std::string, std::string> fields;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = upper(trim(line.substr(0, colon)));
        key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == '*' || c == '`'; }), key.end());
        if (key != "COMPARATIVE" && key != "ATOMIC" && key != "CLEAR" && key != "CATEGORY" && key != "CONSISTENT")
            continue;
        if (fields.count(key)) throw OutputParseError(ErrorKind::JudgeParse, "duplicate judge line " + key, raw);
        std::string value = trim(line.substr(colon + 1));
        value.erase(std::remove_if(value.begin(), value.end(), [](char c) { return c == '*' || c == '`'; }),
                    value.end());
        fields[key] = value;
    }

    auto flag = [&](const char* key) {
        auto it = fields.find(key);
        if (it == fields.end()) throw OutputParseError(ErrorKind::JudgeParse, std::string("missing ") + key, raw);
        const auto v = upper(it->second);
        if (v == "YES") return true;
        if (v == "NO") return false;
        throw OutputParseError(ErrorKind::JudgeParse, std::string(key) + " must be YES or NO", raw);
    };

    ValidityVerdict v;
    v.comparative = flag("COMPARATIVE");
    v.atomic = flag("ATOMIC");
    v.clear = flag("CLEAR");
    v.consistent = flag("CONSISTENT");
    auto cat = fields.find("CATEGORY");
    if (cat == fields.end()) throw OutputParseError(ErrorKind::JudgeParse, "missing CATEGORY", raw);
    if (upper(cat->second) != "NONE") v.category = feature_category_from_string(cat->second);
    return v;
}

std::string render_feature_for_judge(const DifferenceFeature& f) {
    return "[" + f.dimension.name + "] " + f.description + " (direction: " + to_string(f.direction) + ")";
}

ValidityVerdict judge_feature(const DifferenceFeature& feature, std::span<const DifferenceFeature> siblings,
                              Gateway& gateway, const PromptSet& prompts, double temperature) {
    std::string sibling_text;
    for (const auto& s : siblings) {
        if (!sibling_text.empty()) sibling_text += '\n';
        sibling_text += "- " + render_feature_for_judge(s);
    }
    if (sibling_text.empty()) sibling_text = "(none)";
    const std::map<std::string, std::string> vars = {{"feature", render_feature_for_judge(feature)},
                                                     {"siblings", sibling_text}};
    auto request = gateway.make_request(LlmRole::Judge,
                                        {{ChatRole::System, render_template(prompts.get(prompt::kJudgeSystem), vars)},
                                         {ChatRole::User, render_template(prompts.get(prompt::kJudgeUser), vars)}},
                                        temperature);
    return parse_judge_output(gateway.complete(LlmRole::Judge, request).content);
}

std::string canonical_dimension_name(const std::string& name) {
    auto tokens = tokenize(name).tokens;
    std::sort(tokens.begin(), tokens.end());
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

FeatureKey canonical_feature_key(const DifferenceFeature& feature, const ValidityVerdict& verdict) {
    if (!verdict.valid()) throw Error(ErrorKind::InvalidArgument, "canonical keys exist only for valid features");
    return FeatureKey{*verdict.category, canonical_dimension_name(feature.dimension.name), feature.direction};
}

std::vector<JudgedFeature> dedup_and_resolve(std::span<const JudgedFeature> user_features) {
    std::map<FeatureKey, const JudgedFeature*> unique;
    for (const auto& jf : user_features) {
        if (!jf.verdict.valid()) continue;
        auto key = canonical_feature_key(jf.feature, jf.verdict);
        auto [it, inserted] = unique.emplace(std::move(key), &jf);
        if (!inserted && feature_less(jf.feature, it->second->feature)) it->second = &jf;
    }

    std::set<std::pair<FeatureCategory, std::string>> conflicted;
    for (const auto& [key, _] : unique) {
        if (key.direction != Direction::TargetHigher) continue;
        if (unique.count(FeatureKey{key.category, key.name, Direction::TargetLower}))
            conflicted.emplace(key.category, key.name);
    }

    std::vector<JudgedFeature> out;
    for (const auto& [key, jf] : unique)
        if (!conflicted.count({key.category, key.name})) out.push_back(*jf);
    return out;
}

UvqReport compute_uvq(const std::map<std::string, std::vector<JudgedFeature>>& per_user_sets,
                      std::size_t judged_total, UvqAggregation aggregation) {
    UvqReport report;
    report.judged_total = judged_total;
    report.aggregation = aggregation;

    std::map<FeatureCategory, std::size_t> counts;
    std::set<FeatureKey> all_keys;
    std::size_t sum = 0;
    for (const auto& [user, features] : per_user_sets) {
        report.per_user[user] = features.size();
        sum += features.size();
        for (const auto& jf : features) {
            auto key = canonical_feature_key(jf.feature, jf.verdict);
            if (aggregation == UvqAggregation::Sum) ++counts[key.category];
            all_keys.insert(std::move(key));
        }
    }
    if (aggregation == UvqAggregation::Union) {
        report.dataset_uvq = all_keys.size();
        for (const auto& key : all_keys) ++counts[key.category];
    } else {
        report.dataset_uvq = sum;
    }

    std::size_t total = 0;
    for (const auto& [_, n] : counts) total += n;
    if (total > 0)
        for (auto c : kAllCategories)
            report.category_proportions[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
    return report;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::DegenerateInput, "pearson: length mismatch");
    if (xs.size() < 2) throw Error(ErrorKind::DegenerateInput, "pearson needs at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateInput, "pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<std::string, std::vector<DifferenceFeature>> collect_kept_features(std::span<const ValidatedReport> reports) {
    std::map<std::string, std::vector<DifferenceFeature>> out;
    for (const auto& r : reports) {
        auto& bucket = out[r.source.target_user];
        bucket.insert(bucket.end(), r.kept.begin(), r.kept.end());
    }
    return out;
}

UvqReport analyze_uvq(std::span<const ValidatedReport> reports, Gateway& gateway, const PromptSet& prompts,
                      UvqAggregation aggregation, std::size_t max_concurrency) {
    const auto by_user = collect_kept_features(reports);

    struct Job {
        const std::string* user;
        std::size_t index;
    };
    std::vector<Job> jobs;
    for (const auto& [user, features] : by_user)
        for (std::size_t i = 0; i < features.size(); ++i) jobs.push_back({&user, i});

    std::map<std::string, std::vector<std::string>> canonical;
    for (const auto& [user, features] : by_user)
        for (const auto& f : features) canonical[user].push_back(canonical_dimension_name(f.dimension.name));

    std::vector<ValidityVerdict> verdicts(jobs.size());
    parallel_for(jobs.size(), max_concurrency, [&](std::size_t j) {
        const auto& features = by_user.at(*jobs[j].user);
        const auto& names = canonical.at(*jobs[j].user);
        const std::size_t self = jobs[j].index;
        std::vector<DifferenceFeature> siblings;
        for (std::size_t i = 0; i < features.size(); ++i)
            if (i != self && names[i] == names[self]) siblings.push_back(features[i]);
        verdicts[j] = judge_feature(features[self], siblings, gateway, prompts);
    });

    std::map<std::string, std::vector<JudgedFeature>> judged;
    for (const auto& [user, _] : by_user) judged[user];
    for (std::size_t j = 0; j < jobs.size(); ++j)
        judged[*jobs[j].user].push_back({by_user.at(*jobs[j].user)[jobs[j].index], verdicts[j]});

    std::map<std::string, std::vector<JudgedFeature>> unique;
    for (const auto& [user, features] : judged) unique[user] = dedup_and_resolve(features);
    return compute_uvq(unique, jobs.size(), aggregation);
}

json to_json(const ValidityVerdict& v) {
    return {{"comparative", v.comparative},
            {"atomic", v.atomic},
            {"clear", v.clear},
            {"categorized", v.categorized()},
            {"category", v.category ? json(to_string(*v.category)) : json(nullptr)},
            {"consistent", v.consistent},
            {"valid", v.valid()}};
}

json to_json(const UvqReport& r) {
    json props = json::object();
    for (const auto& [c, p] : r.category_proportions) props[to_string(c)] = p;
    return {{"per_user", r.per_user},
            {"dataset_uvq", r.dataset_uvq},
            {"category_proportions", props},
            {"judged_total", r.judged_total},
            {"aggregation", to_string(r.aggregation)}};
}

UvqReport uvq_report_from_json(const json& j) {
    UvqReport r;
    r.per_user = j.at("per_user").get<std::map<std::string, std::size_t>>();
    r.dataset_uvq = j.at("dataset_uvq").get<std::size_t>();
    for (const auto& [name, p] : j.at("category_proportions").items())
        r.category_proportions[feature_category_from_string(name)] = p.get<double>();
    r.judged_total = j.at("judged_total").get<std::size_t>();
    r.aggregation = uvq_aggregation_from_string(j.value("aggregation", std::string("sum")));
    return r;
}

}  // namespace drp
