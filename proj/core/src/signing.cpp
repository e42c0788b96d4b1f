#include "fenrich/signing.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <exception>
#include <thread>

#include <json.hpp>

#include "fenrich/hashing.hpp"
#include "fenrich/jsonl.hpp"
#include "fenrich/random.hpp"

namespace fenrich::signing {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Words of [a-z0-9]; ';' becomes a clause-break marker.
std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : lower(sentence)) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    } else {
      flush();
      if (ch == ';') tokens.emplace_back(";");
    }
  }
  flush();
  return tokens;
}

bool one_of(const std::string& tok, std::initializer_list<std::string_view> words) {
  return std::find(words.begin(), words.end(), tok) != words.end();
}

bool is_clause_break(const std::string& tok) {
  return one_of(tok, {";", "but", "however", "although", "though", "except", "whereas"});
}

bool is_pre_negation(const std::string& tok) {
  return one_of(tok, {"no", "not", "without", "negative", "free", "nor"});
}

bool is_post_negation(const std::string& tok) {
  return one_of(tok, {"none", "absent", "resolved", "excluded"});
}

constexpr std::array<std::string_view, 34> kPathologyStems = {
    "mass",      "effusion",  "opacit",     "fractur",  "cardiomegal", "infiltrat", "pneumothora",
    "edema",     "oedema",    "consolidat", "atelecta", "nodul",       "granulom",  "abnormal",
    "lesion",    "pneumonia", "emphysema",  "calcifi",  "enlarg",      "thicken",   "hernia",
    "collapse",  "deformit",  "scoliosis",  "osteopeni", "congest",    "tortuous",  "atheroscler",
    "hyperinflat", "tumor",   "carcinoma",  "metasta",  "cardiomyopath", "fibrosis"};

bool is_pathology(const std::string& tok) {
  return std::any_of(kPathologyStems.begin(), kPathologyStems.end(),
                     [&](std::string_view stem) { return tok.rfind(stem, 0) == 0; });
}

bool has_phrase(const std::vector<std::string>& tokens, std::initializer_list<std::string_view> phrase) {
  const std::size_t len = phrase.size();
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

bool has_normal_cue(const std::vector<std::string>& t) {
  return has_phrase(t, {"no"}) || has_phrase(t, {"not"}) || has_phrase(t, {"without"}) ||
         has_phrase(t, {"free", "of"}) || has_phrase(t, {"unremarkable"}) ||
         has_phrase(t, {"within", "normal", "limits"}) || has_phrase(t, {"normal"}) || has_phrase(t, {"clear"}) ||
         has_phrase(t, {"intact"}) || has_phrase(t, {"midline"}) || has_phrase(t, {"negative", "for"}) ||
         has_phrase(t, {"none"}) || has_phrase(t, {"adequately", "inflated"}) ||
         has_phrase(t, {"well", "inflated"}) || has_phrase(t, {"well", "expanded"});
}

bool has_unnegated_pathology(const std::vector<std::string>& tokens) {
  std::size_t clause_start = 0;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i < tokens.size() && !is_clause_break(tokens[i])) continue;
    // Clause is [clause_start, i).
    bool negated_so_far = false;
    bool post_negated = false;
    for (std::size_t j = clause_start; j < i; ++j) post_negated |= is_post_negation(tokens[j]);
    for (std::size_t j = clause_start; j < i; ++j) {
      if (is_pre_negation(tokens[j])) negated_so_far = true;
      if (is_pathology(tokens[j]) && !negated_so_far && !post_negated) return true;
    }
    clause_start = i + 1;
  }
  return false;
}

constexpr std::string_view kPromptTemplate =
    "Evaluate whether the following sentence is positive or not. Any medical finding rather a normal "
    "finding should be considered as negative finding.\n"
    "\n"
    "- If it includes any medical finding rather than a normal finding of a completely healthy person, "
    "respond with 'negative'.\n"
    "- If this finding seems like a finding of a healthy person, respond with 'positive'.\n"
    "\n"
    "Provide only 'positive' or 'negative' as the output, with no explanation.\n"
    "\n"
    "The finding is: {finding}";

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kLlm:
      return "llm";
    case Provenance::kFallback:
      return "fallback";
    case Provenance::kManual:
      return "manual";
    case Provenance::kFailureDefault:
      return "failure_default";
  }
  return "unknown";
}

Provenance parse_provenance(const std::string& name) {
  if (name == "llm") return Provenance::kLlm;
  if (name == "fallback") return Provenance::kFallback;
  if (name == "manual") return Provenance::kManual;
  if (name == "failure_default") return Provenance::kFailureDefault;
  throw DomainError("unknown sign provenance '" + name + "'");
}

std::vector<SentenceId> pick_representative(const clustering::ClusterAssignment& assignment, std::uint64_t seed) {
  if (assignment.num_clusters() == 0) throw DomainError("cannot pick representatives: no clusters");
  std::vector<SentenceId> reps(assignment.num_clusters());
  for (std::size_t c = 0; c < reps.size(); ++c) {
    const auto& members = assignment.members(static_cast<ClusterId>(c));
    Rng rng(seed ^ static_cast<std::uint64_t>(c));
    reps[c] = members[rng.uniform_index(members.size())];
  }
  return reps;
}

Sign classify_sign_fallback(std::string_view sentence) {
  const auto tokens = tokenize(sentence);
  if (tokens.empty()) throw DomainError("cannot classify an empty sentence");
  const bool pathology = has_unnegated_pathology(tokens);
  if (pathology) return Sign::kNegative;
  if (has_normal_cue(tokens)) return Sign::kPositive;
  return Sign::kNegative;
}

std::string build_prompt(std::string_view finding) {
  std::string prompt(kPromptTemplate);
  const auto pos = prompt.find("{finding}");
  prompt.replace(pos, 9, finding);
  return prompt;
}

std::optional<Sign> parse_sign_response(std::string_view response) {
  const auto end_think = response.rfind("</think>");
  if (end_think != std::string_view::npos) response.remove_prefix(end_think + 8);
  const std::string text = lower(response);
  const auto pos = text.rfind("positive");
  const auto neg = text.rfind("negative");
  if (pos == std::string::npos && neg == std::string::npos) return std::nullopt;
  if (neg == std::string::npos) return Sign::kPositive;
  if (pos == std::string::npos) return Sign::kNegative;
  return pos > neg ? Sign::kPositive : Sign::kNegative;
}

LlmConfig LlmConfig::from_env() {
  LlmConfig c;
  if (const char* v = std::getenv("FENRICH_LLM_URL")) c.url = v;
  if (const char* v = std::getenv("FENRICH_LLM_API_KEY")) c.api_key = v;
  if (const char* v = std::getenv("FENRICH_LLM_MODEL")) c.model = v;
  return c;
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  for_each_line(*file_, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      entries_[rec.at("prompt_sha256").get<std::string>()] = rec.at("response_text").get<std::string>();
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& response) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key, response);
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void ResponseCache::save() const {
  if (!file_) return;
  std::lock_guard lock(mu_);
  AtomicFileWriter w(*file_);
  for (const auto& [key, response] : entries_) {
    w.stream() << json{{"prompt_sha256", key}, {"response_text", response}}.dump() << '\n';
  }
  w.commit();
}

LlmClassifier::LlmClassifier(Transport transport, LlmConfig config, ResponseCache* cache)
    : transport_(std::move(transport)), config_(std::move(config)), cache_(cache) {
  if (!transport_) throw DomainError("LLM classifier needs a transport");
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

Sign LlmClassifier::classify(std::string_view sentence) {
  const std::string prompt = build_prompt(sentence);
  const std::string key = sha256_hex(prompt);
  if (cache_) {
    if (auto cached = cache_->get(key)) {
      if (auto sign = parse_sign_response(*cached)) return *sign;
    }
  }

  std::string last_response;
  std::string last_transport_error;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    std::string response;
    try {
      ++calls_;
      response = transport_(prompt);
    } catch (const TransportError& e) {
      last_transport_error = e.what();
      if (attempt + 1 < config_.max_attempts && config_.backoff.count() > 0) {
        std::this_thread::sleep_for(config_.backoff * (1 << attempt));
      }
      continue;
    }
    if (auto sign = parse_sign_response(response)) {
      if (cache_) cache_->put(key, response);
      return *sign;
    }
    last_response = std::move(response);
  }
  if (last_response.empty() && !last_transport_error.empty()) {
    throw TransportError("LLM request failed after " + std::to_string(config_.max_attempts) +
                         " attempts: " + last_transport_error);
  }
  throw SignError("no 'positive'/'negative' token in LLM response after " +
                      std::to_string(config_.max_attempts) + " attempts: " + last_response,
                  last_response);
}

Sign classify_sign_llm(std::string_view sentence, LlmClassifier& client) { return client.classify(sentence); }

SignMap sign_all_clusters(const clustering::ClusterAssignment& assignment, const corpus::SentenceTable& table,
                          const SignOptions& options) {
  SignMap out;
  out.representative = pick_representative(assignment, options.seed);
  const std::size_t k = out.representative.size();
  out.signs.assign(k, Sign::kNegative);
  out.provenance.assign(k, options.mode == Mode::kLlm ? Provenance::kLlm : Provenance::kFallback);

  if (options.mode == Mode::kFallback) {
    for (std::size_t c = 0; c < k; ++c) {
      try {
        out.signs[c] = classify_sign_fallback(table.text(out.representative[c]));
      } catch (const std::exception& e) {
        throw DomainError("cluster " + std::to_string(c) + ": " + e.what());
      }
    }
    return out;
  }

  if (!options.llm) throw DomainError("LLM sign mode requires a configured client");
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < k; c = next++) {
      try {
        out.signs[c] = options.llm->classify(table.text(out.representative[c]));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.llm->config().max_in_flight, k));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (std::size_t c = 0; c < k; ++c) {
    if (!errors[c]) continue;
    if (options.on_failure == OnFailure::kNegative) {
      out.signs[c] = Sign::kNegative;
      out.provenance[c] = Provenance::kFailureDefault;
      continue;
    }
    try {
      std::rethrow_exception(errors[c]);
    } catch (const SignError& e) {
      throw SignError("cluster " + std::to_string(c) + ": " + e.what(), e.raw_response());
    } catch (const std::exception& e) {
      throw DomainError("cluster " + std::to_string(c) + ": " + e.what());
    }
  }
  return out;
}

void save_signs(const SignMap& signs, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  for (std::size_t c = 0; c < signs.size(); ++c) {
    json rec;
    rec["cluster_id"] = c;
    rec["sign"] = to_int(signs.signs[c]);
    rec["provenance"] = to_string(signs.provenance[c]);
    rec["representative_sentence_id"] = signs.representative[c];
    w.stream() << rec.dump() << '\n';
  }
  w.commit();
}

SignMap load_signs(const std::filesystem::path& path) {
  SignMap out;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      if (rec.at("cluster_id").get<std::size_t>() != out.size()) throw DomainError("cluster_id out of sequence");
      const int s = rec.at("sign").get<int>();
      if (s != 1 && s != -1) throw DomainError("sign must be +1 or -1");
      out.signs.push_back(s > 0 ? Sign::kPositive : Sign::kNegative);
      out.provenance.push_back(parse_provenance(rec.at("provenance").get<std::string>()));
      out.representative.push_back(rec.at("representative_sentence_id").get<SentenceId>());
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  return out;
}

}  // namespace fenrich::signing
