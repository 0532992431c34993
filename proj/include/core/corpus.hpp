#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace core {

inline constexpr std::size_t kDefaultChunkBudget = 100;
inline constexpr std::string_view kSegmentSeparator = " || ";
inline constexpr std::string_view kCellSeparator = ", ";
// Row index used in cell maps for header cells.
inline constexpr int kHeaderRow = -1;

struct Passage {
  std::string id;
  std::string title;
  std::string text;
};

struct Table {
  std::string id;
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Location of one cell inside a flattened string. Token offsets are half-open
// whitespace-token indices; byte offsets are the authoritative recovery path
// (text.substr(byte_begin, byte_end - byte_begin) == cell).
struct CellSpan {
  int row = 0;  // kHeaderRow for header cells
  int col = 0;
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
};

struct FlatTable {
  std::string text;
  std::vector<CellSpan> cells;
};

struct TableChunk {
  std::string chunk_id;  // "<table_id>#<k>"
  std::string table_id;
  std::string text;
  std::size_t word_count = 0;
  std::vector<CellSpan> cell_map;
  int first_row = 0;  // inclusive; first_row > last_row for a row-less table
  int last_row = -1;
};

struct GoldLink {
  std::string chunk_id;
  std::size_t start = 0;  // inclusive token indices within the chunk
  std::size_t end = 0;
  std::string passage_id;
};

struct GoldAnnotation {
  std::string qid;
  std::string question;
  std::vector<std::string> answers;
  std::vector<std::string> gold_chunks;
  std::vector<GoldLink> gold_links;
};

// Throws ValidationError naming the offending row when a row's cell count
// differs from the header's.
void validate_table(const Table& table);

// "<title> || <h1>, <h2> || <r1c1>, <r1c2> || ..."; the header segment is
// omitted when the header is empty.
FlatTable flatten_table(const Table& table);

// Greedy row packing under a whitespace-token budget. Every chunk repeats the
// title+header prefix; a row that alone overflows the budget forms its own
// chunk.
std::vector<TableChunk> chunk_table(const Table& table, std::size_t budget_words = kDefaultChunkBudget);

// The cell whose token range contains `token`, or nullptr.
const CellSpan* cell_at_token(const std::vector<CellSpan>& cells, std::size_t token);

// Reader text for a passage: "<title> <text>".
std::string passage_text(const Passage& p);

struct CorpusCounts {
  std::size_t passages = 0;
  std::size_t tables = 0;
  std::size_t chunks = 0;
};

// Immutable after load; safe for concurrent reads.
class CorpusStore {
 public:
  CorpusStore() = default;
  CorpusStore(std::vector<Passage> passages, std::vector<Table> tables,
              std::size_t budget_words = kDefaultChunkBudget);

  const std::vector<Passage>& passages() const { return passages_; }
  const std::vector<Table>& tables() const { return tables_; }
  const std::vector<TableChunk>& chunks() const { return chunks_; }
  std::size_t budget_words() const { return budget_words_; }
  CorpusCounts counts() const { return {passages_.size(), tables_.size(), chunks_.size()}; }

  const Passage* find_passage(std::string_view id) const;
  const Table* find_table(std::string_view id) const;
  const TableChunk* find_chunk(std::string_view id) const;
  const Passage& passage(std::string_view id) const;
  const Table& table(std::string_view id) const;
  const TableChunk& chunk(std::string_view id) const;
  std::size_t passage_ordinal(std::string_view id) const;

 private:
  std::vector<Passage> passages_;
  std::vector<Table> tables_;
  std::vector<TableChunk> chunks_;
  std::size_t budget_words_ = kDefaultChunkBudget;
  std::unordered_map<std::string, std::size_t> passage_by_id_;
  std::unordered_map<std::string, std::size_t> table_by_id_;
  std::unordered_map<std::string, std::size_t> chunk_by_id_;
};

std::vector<Passage> read_passages(const std::filesystem::path& path);
std::vector<Table> read_tables(const std::filesystem::path& path);
std::vector<GoldAnnotation> read_gold(const std::filesystem::path& path);

CorpusStore load_corpus(const std::filesystem::path& passages_path, const std::filesystem::path& tables_path,
                        std::size_t budget_words = kDefaultChunkBudget);

// Corpus directory written by `ingest`: passages.jsonl, tables.jsonl,
// chunks.jsonl and manifest.json (budget and counts).
void write_corpus_dir(const CorpusStore& store, const std::filesystem::path& dir);
CorpusStore load_corpus_dir(const std::filesystem::path& dir);

// Every referenced chunk/passage must exist and every gold link span must lie
// inside one cell of its chunk.
void validate_gold(const std::vector<GoldAnnotation>& gold, const CorpusStore& store);

}  // namespace core
