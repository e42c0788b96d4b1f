#include "fenrich/corpus.hpp"

#include <cctype>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "fenrich/error.hpp"
#include "fenrich/jsonl.hpp"

namespace fenrich::corpus {
namespace {

using nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DomainError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw DomainError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

template <typename LineSource>
Corpus ingest_lines(LineSource&& source, const IngestOptions& options) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;

  source([&](std::size_t line_no, std::string_view line) {
    Report report;
    try {
      json record = json::parse(line);
      if (!record.is_object()) throw DomainError("record is not a JSON object");
      report.report_id = require_string(record, "report_id");
      report.findings_text = require_string(record, "findings");
      report.impression_text = require_string(record, "impression");
      if (report.report_id.empty()) throw DomainError("empty report_id");
      if (seen_ids.count(report.report_id)) {
        throw DomainError("duplicate report_id '" + report.report_id + "'");
      }
    } catch (const std::exception& e) {
      if (options.on_error == OnRecordError::kAbort) throw RecordError(line_no, e.what());
      corpus.rejected.push_back({line_no, report.report_id, e.what()});
      return;
    }

    auto sentences = split_sentences(report.findings_text, options.split);
    if (sentences.empty()) {
      corpus.rejected.push_back({line_no, report.report_id, "empty findings after splitting"});
      return;
    }
    report.findings_sentences.reserve(sentences.size());
    for (auto& s : sentences) report.findings_sentences.push_back(corpus.table.intern(s));
    seen_ids.insert(report.report_id);
    corpus.reports.push_back(std::move(report));
  });
  return corpus;
}

}  // namespace

std::string normalize_sentence(std::string_view text, const SplitConfig& config) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    const auto uc = static_cast<unsigned char>(c);
    out.push_back(config.lowercase && uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text, const SplitConfig& config) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto s = normalize_sentence(text.substr(start, end - start), config);
    if (!s.empty()) out.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_terminal(text[i])) continue;
    if (i + 1 == text.size() || is_space(text[i + 1])) {
      flush(i);
      start = i + 1;
    }
  }
  if (start < text.size()) flush(text.size());
  return out;
}

SentenceId SentenceTable::intern(const std::string& normalized) {
  auto [it, inserted] = reverse_.try_emplace(normalized, static_cast<SentenceId>(sentences_.size()));
  if (inserted) sentences_.push_back(normalized);
  return it->second;
}

std::optional<SentenceId> SentenceTable::find(std::string_view normalized) const {
  auto it = reverse_.find(std::string(normalized));
  if (it == reverse_.end()) return std::nullopt;
  return it->second;
}

Corpus ingest_corpus(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest_lines([&](auto&& fn) { for_each_line(path, fn); }, options);
}

Corpus ingest_corpus_text(std::string_view jsonl, const IngestOptions& options) {
  return ingest_lines(
      [&](auto&& fn) {
        std::istringstream in{std::string(jsonl)};
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          fn(line_no, line);
        }
      },
      options);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  {
    AtomicFileWriter w(dir / kSentencesFile);
    const auto& sentences = corpus.table.sentences();
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      w.stream() << json{{"index", i}, {"text", sentences[i]}}.dump() << '\n';
    }
    w.commit();
  }
  AtomicFileWriter w(dir / kReportsFile);
  for (const auto& r : corpus.reports) {
    json rec;
    rec["report_id"] = r.report_id;
    rec["sentence_ids"] = r.findings_sentences;
    rec["impression"] = r.impression_text;
    rec["findings"] = r.findings_text;
    w.stream() << rec.dump() << '\n';
  }
  w.commit();
}

SentenceTable load_sentence_table(const std::filesystem::path& sentences_file) {
  SentenceTable table;
  for_each_line(sentences_file, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      const auto index = rec.at("index").get<std::size_t>();
      if (index != table.size()) throw DomainError("sentence index out of sequence");
      const auto text = rec.at("text").get<std::string>();
      if (table.intern(text) != index) throw DomainError("duplicate sentence text");
    } catch (const RecordError&) {
      throw;
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  return table;
}

std::vector<Report> load_reports(const std::filesystem::path& reports_file) {
  std::vector<Report> reports;
  for_each_line(reports_file, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      Report r;
      r.report_id = rec.at("report_id").get<std::string>();
      r.findings_sentences = rec.at("sentence_ids").get<std::vector<SentenceId>>();
      r.impression_text = rec.at("impression").get<std::string>();
      r.findings_text = rec.value("findings", std::string{});
      reports.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  return reports;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  corpus.table = load_sentence_table(dir / kSentencesFile);
  corpus.reports = load_reports(dir / kReportsFile);
  for (const auto& r : corpus.reports) {
    for (auto id : r.findings_sentences) {
      if (id >= corpus.table.size()) {
        throw DomainError("report '" + r.report_id + "' references unknown sentence " +
                          std::to_string(id));
      }
    }
  }
  return corpus;
}

}  // namespace fenrich::corpus
