#include "drp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "drp/error.hpp"
#include "drp/tokenize.hpp"

namespace drp {

using json = nlohmann::json;

namespace {

std::string require_string(const json& j, const char* key, std::size_t line, bool nonempty) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    auto value = it->get<std::string>();
    if (nonempty && trim(value).empty()) throw ParseError(line, std::string("field '") + key + "' is empty");
    return value;
}

bool full_order_less(const ReviewSample& a, const ReviewSample& b) {
    return std::tie(a.user_id, a.timestamp, a.item_id) < std::tie(b.user_id, b.timestamp, b.item_id);
}

}  // namespace

bool canonical_less(const ReviewSample& a, const ReviewSample& b) noexcept {
    return std::tie(a.timestamp, a.item_id) < std::tie(b.timestamp, b.item_id);
}

json to_json(const ReviewSample& s) {
    json j = json::object();
    j["user_id"] = s.user_id;
    j["item_id"] = s.item_id;
    j["item_title"] = s.item_title;
    j["item_description"] = s.item_description;
    j["review_text"] = s.review_text;
    j["timestamp"] = s.timestamp;
    if (s.rating) j["rating"] = *s.rating;
    return j;
}

ReviewSample review_sample_from_json(const json& j) {
    ReviewSample s;
    s.user_id = j.at("user_id").get<std::string>();
    s.item_id = j.at("item_id").get<std::string>();
    s.item_title = j.value("item_title", "");
    s.item_description = j.value("item_description", "");
    s.review_text = j.at("review_text").get<std::string>();
    s.timestamp = j.value("timestamp", std::int64_t{0});
    if (auto it = j.find("rating"); it != j.end() && it->is_number()) s.rating = it->get<double>();
    return s;
}

Corpus parse_corpus(std::string_view jsonl, std::string dataset_name) {
    Corpus corpus;
    corpus.dataset_name = std::move(dataset_name);

    std::istringstream in{std::string(jsonl)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (trim(raw).empty()) continue;

        json j;
        try {
            j = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record must be a JSON object");

        ReviewSample s;
        s.user_id = require_string(j, "user_id", line_no, true);
        s.item_id = require_string(j, "item_id", line_no, true);
        s.item_title = require_string(j, "item_title", line_no, false);
        if (auto it = j.find("item_description"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError(line_no, "field 'item_description' must be a string");
            s.item_description = it->get<std::string>();
        }
        s.review_text = require_string(j, "review_text", line_no, true);

        auto ts = j.find("timestamp");
        if (ts == j.end() || !ts->is_number_integer())
            throw ParseError(line_no, "field 'timestamp' must be an integer");
        s.timestamp = ts->get<std::int64_t>();
        if (s.timestamp < 0) throw ParseError(line_no, "field 'timestamp' must be >= 0");

        if (auto r = j.find("rating"); r != j.end() && !r->is_null()) {
            if (!r->is_number()) throw ParseError(line_no, "field 'rating' must be a number");
            double rating = r->get<double>();
            if (rating < 1.0 || rating > 5.0) throw ParseError(line_no, "field 'rating' outside [1,5]");
            s.rating = rating;
        }

        auto split = j.find("split");
        if (split == j.end() || !split->is_string()) throw ParseError(line_no, "missing field 'split'");
        const auto tag = split->get<std::string>();
        if (tag == "train") {
            corpus.train.push_back(std::move(s));
        } else if (tag == "test") {
            corpus.test.push_back(std::move(s));
        } else {
            throw ParseError(line_no, "split must be 'train' or 'test', got '" + tag + "'");
        }
    }

    std::set<std::pair<std::string, std::string>> train_pairs;
    std::set<std::string> train_users;
    for (const auto& s : corpus.train) {
        train_pairs.emplace(s.user_id, s.item_id);
        train_users.insert(s.user_id);
    }
    for (const auto& s : corpus.test) {
        if (train_pairs.count({s.user_id, s.item_id}))
            throw Error(ErrorKind::Partition,
                        "pair (" + s.user_id + ", " + s.item_id + ") appears in both train and test");
        if (!train_users.count(s.user_id))
            throw Error(ErrorKind::Partition, "test user '" + s.user_id + "' has no train samples");
    }

    std::stable_sort(corpus.train.begin(), corpus.train.end(), full_order_less);
    std::stable_sort(corpus.test.begin(), corpus.test.end(), full_order_less);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    (void)format;  // jsonl is the only format
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read corpus file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::Io, "read failure on '" + path.string() + "'");
    return parse_corpus(buf.str(), path.stem().string());
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    auto emit = [&](const ReviewSample& s, const char* split) {
        json j = to_json(s);
        j["split"] = split;
        out += j.dump();
        out += '\n';
    };
    for (const auto& s : corpus.train) emit(s, "train");
    for (const auto& s : corpus.test) emit(s, "test");
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << corpus_to_jsonl(corpus);
}

UserHistory user_history(const Corpus& corpus, const std::string& user_id) {
    UserHistory h{user_id, {}};
    for (const auto& s : corpus.train)
        if (s.user_id == user_id) h.samples.push_back(s);
    if (h.samples.empty()) throw Error(ErrorKind::UnknownUser, "no train samples for user '" + user_id + "'");
    std::stable_sort(h.samples.begin(), h.samples.end(), canonical_less);
    return h;
}

std::vector<std::string> all_users(const Corpus& corpus) {
    std::set<std::string> users;
    for (const auto& s : corpus.train) users.insert(s.user_id);
    return {users.begin(), users.end()};
}

}  // namespace drp
