#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fenrich/types.hpp"

namespace fenrich::corpus {

struct SplitConfig {
  bool lowercase = true;
};

// Lowercases (ASCII, when configured), collapses whitespace runs to a single
// space and trims. This is the key used for sentence deduplication.
std::string normalize_sentence(std::string_view text, const SplitConfig& config = {});

// Splits on '.', '!' or '?' followed by whitespace or end of text. The
// terminating mark is dropped, each fragment normalized, empty fragments
// discarded, order preserved.
std::vector<std::string> split_sentences(std::string_view text, const SplitConfig& config = {});

struct Report {
  std::string report_id;
  std::string findings_text;
  std::string impression_text;
  std::vector<SentenceId> findings_sentences;

  bool operator==(const Report&) const = default;
};

// Bijection between dense ids and normalized sentence text.
class SentenceTable {
 public:
  // Returns the existing id for `normalized`, or appends it.
  SentenceId intern(const std::string& normalized);
  std::optional<SentenceId> find(std::string_view normalized) const;

  const std::string& text(SentenceId id) const { return sentences_.at(id); }
  std::size_t size() const noexcept { return sentences_.size(); }
  const std::vector<std::string>& sentences() const noexcept { return sentences_; }

  bool operator==(const SentenceTable& other) const { return sentences_ == other.sentences_; }

 private:
  std::vector<std::string> sentences_;
  std::unordered_map<std::string, SentenceId> reverse_;
};

enum class OnRecordError { kSkip, kAbort };

struct IngestOptions {
  SplitConfig split;
  OnRecordError on_error = OnRecordError::kSkip;
};

struct IngestDiagnostic {
  std::size_t line = 0;
  std::string report_id;
  std::string message;
};

struct Corpus {
  std::vector<Report> reports;
  SentenceTable table;
  // Records that were skipped (malformed, duplicate id, empty findings).
  std::vector<IngestDiagnostic> rejected;
};

// Reads a JSON-lines file with keys report_id, findings, impression.
// Malformed records throw RecordError under OnRecordError::kAbort and are
// recorded in Corpus::rejected otherwise. Reports whose findings split into
// no sentences are always rejected with a diagnostic.
Corpus ingest_corpus(const std::filesystem::path& path, const IngestOptions& options = {});
Corpus ingest_corpus_text(std::string_view jsonl, const IngestOptions& options = {});

// Archive layout: sentences.jsonl {index, text}; reports.jsonl
// {report_id, sentence_ids, impression, findings}.
inline constexpr std::string_view kSentencesFile = "sentences.jsonl";
inline constexpr std::string_view kReportsFile = "reports.jsonl";

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

SentenceTable load_sentence_table(const std::filesystem::path& sentences_file);
std::vector<Report> load_reports(const std::filesystem::path& reports_file);

}  // namespace fenrich::corpus
