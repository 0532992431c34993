#include "core/corpus.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "core/error.hpp"
#include "core/text.hpp"

namespace core {

using nlohmann::json;

namespace {

void append_cells(std::string& out, std::vector<CellSpan>& cells, const std::vector<std::string>& values, int row) {
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c) out += kCellSeparator;
    CellSpan span;
    span.row = row;
    span.col = static_cast<int>(c);
    span.byte_begin = out.size();
    out += values[c];
    span.byte_end = out.size();
    cells.push_back(span);
  }
}

// Fills token offsets: a cell owns every token that starts inside its bytes.
void assign_token_offsets(const std::string& text, std::vector<CellSpan>& cells) {
  auto spans = text::token_spans(text);
  std::size_t t = 0;
  for (auto& cell : cells) {
    while (t < spans.size() && spans[t].begin < cell.byte_begin) ++t;
    cell.token_begin = t;
    std::size_t e = t;
    while (e < spans.size() && spans[e].begin < cell.byte_end) ++e;
    cell.token_end = e;
    t = e;
  }
}

std::string render_prefix(const Table& table, std::vector<CellSpan>& cells) {
  std::string out = table.title;
  if (!table.header.empty()) {
    out += kSegmentSeparator;
    append_cells(out, cells, table.header, kHeaderRow);
  }
  return out;
}

void append_row(std::string& out, std::vector<CellSpan>& cells, const Table& table, std::size_t r) {
  out += kSegmentSeparator;
  append_cells(out, cells, table.rows[r], static_cast<int>(r));
}

std::size_t row_token_count(const Table& table, std::size_t r) {
  std::string seg;
  std::vector<CellSpan> ignored;
  append_row(seg, ignored, table, r);
  return text::count_tokens(seg);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    try {
      fn(rec, lineno);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

json cell_map_json(const std::vector<CellSpan>& cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({c.row, c.col, c.token_begin, c.token_end, c.byte_begin, c.byte_end});
  }
  return arr;
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void validate_table(const Table& table) {
  if (table.id.empty()) throw ValidationError("table with empty id");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw ValidationError("table " + table.id + ": row " + std::to_string(r) + " has " +
                            std::to_string(table.rows[r].size()) + " cells, header has " +
                            std::to_string(table.header.size()));
    }
  }
}

FlatTable flatten_table(const Table& table) {
  validate_table(table);
  FlatTable flat;
  flat.text = render_prefix(table, flat.cells);
  for (std::size_t r = 0; r < table.rows.size(); ++r) append_row(flat.text, flat.cells, table, r);
  assign_token_offsets(flat.text, flat.cells);
  return flat;
}

std::vector<TableChunk> chunk_table(const Table& table, std::size_t budget_words) {
  if (budget_words == 0) throw ValidationError("chunk budget must be >= 1");
  std::vector<CellSpan> prefix_cells;
  const std::string prefix = render_prefix(table, prefix_cells);
  const std::size_t prefix_tokens = text::count_tokens(prefix);

  // Row groups as [first, last] inclusive.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t words = prefix_tokens;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::size_t row_words = row_token_count(table, r);
    if (!groups.empty() && groups.back().second + 1 == r && words + row_words <= budget_words) {
      groups.back().second = r;
      words += row_words;
      continue;
    }
    groups.emplace_back(r, r);
    words = prefix_tokens + row_words;
  }

  std::vector<TableChunk> chunks;
  auto emit = [&](int first, int last) {
    TableChunk chunk;
    chunk.table_id = table.id;
    chunk.chunk_id = table.id + "#" + std::to_string(chunks.size());
    chunk.cell_map = prefix_cells;
    chunk.text = prefix;
    for (int r = first; r <= last; ++r) append_row(chunk.text, chunk.cell_map, table, static_cast<std::size_t>(r));
    assign_token_offsets(chunk.text, chunk.cell_map);
    chunk.word_count = text::count_tokens(chunk.text);
    chunk.first_row = first;
    chunk.last_row = last;
    chunks.push_back(std::move(chunk));
  };
  if (groups.empty()) emit(0, -1);
  for (auto [first, last] : groups) emit(static_cast<int>(first), static_cast<int>(last));
  return chunks;
}

const CellSpan* cell_at_token(const std::vector<CellSpan>& cells, std::size_t token) {
  for (const auto& c : cells) {
    if (token >= c.token_begin && token < c.token_end) return &c;
  }
  return nullptr;
}

std::string passage_text(const Passage& p) {
  if (p.title.empty()) return p.text;
  return p.title + " " + p.text;
}

CorpusStore::CorpusStore(std::vector<Passage> passages, std::vector<Table> tables, std::size_t budget_words)
    : passages_(std::move(passages)), tables_(std::move(tables)), budget_words_(budget_words) {
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const auto& p = passages_[i];
    if (p.id.empty()) throw ValidationError("passage with empty id");
    if (text::count_tokens(p.text) == 0) throw ValidationError("passage " + p.id + ": empty text");
    if (!passage_by_id_.emplace(p.id, i).second) throw ValidationError("duplicate passage id: " + p.id);
  }
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    validate_table(tables_[i]);
    if (!table_by_id_.emplace(tables_[i].id, i).second) {
      throw ValidationError("duplicate table id: " + tables_[i].id);
    }
    for (auto& chunk : chunk_table(tables_[i], budget_words_)) {
      chunk_by_id_.emplace(chunk.chunk_id, chunks_.size());
      chunks_.push_back(std::move(chunk));
    }
  }
}

const Passage* CorpusStore::find_passage(std::string_view id) const {
  auto it = passage_by_id_.find(std::string(id));
  return it == passage_by_id_.end() ? nullptr : &passages_[it->second];
}

const Table* CorpusStore::find_table(std::string_view id) const {
  auto it = table_by_id_.find(std::string(id));
  return it == table_by_id_.end() ? nullptr : &tables_[it->second];
}

const TableChunk* CorpusStore::find_chunk(std::string_view id) const {
  auto it = chunk_by_id_.find(std::string(id));
  return it == chunk_by_id_.end() ? nullptr : &chunks_[it->second];
}

const Passage& CorpusStore::passage(std::string_view id) const {
  if (auto* p = find_passage(id)) return *p;
  throw ValidationError("unknown passage id: " + std::string(id));
}

const Table& CorpusStore::table(std::string_view id) const {
  if (auto* t = find_table(id)) return *t;
  throw ValidationError("unknown table id: " + std::string(id));
}

const TableChunk& CorpusStore::chunk(std::string_view id) const {
  if (auto* c = find_chunk(id)) return *c;
  throw ValidationError("unknown chunk id: " + std::string(id));
}

std::size_t CorpusStore::passage_ordinal(std::string_view id) const {
  auto it = passage_by_id_.find(std::string(id));
  if (it == passage_by_id_.end()) throw ValidationError("unknown passage id: " + std::string(id));
  return it->second;
}

std::vector<Passage> read_passages(const std::filesystem::path& path) {
  std::vector<Passage> out;
  std::set<std::string> seen;
  for_each_record(path, [&](const json& rec, std::size_t) {
    Passage p;
    p.id = rec.at("id").get<std::string>();
    p.title = rec.value("title", std::string());
    p.text = rec.at("text").get<std::string>();
    if (!seen.insert(p.id).second) throw ValidationError("duplicate passage id: " + p.id);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Table> read_tables(const std::filesystem::path& path) {
  std::vector<Table> out;
  std::set<std::string> seen;
  for_each_record(path, [&](const json& rec, std::size_t) {
    Table t;
    t.id = rec.at("id").get<std::string>();
    t.title = rec.value("title", std::string());
    t.header = rec.at("header").get<std::vector<std::string>>();
    t.rows = rec.at("rows").get<std::vector<std::vector<std::string>>>();
    validate_table(t);
    if (!seen.insert(t.id).second) throw ValidationError("duplicate table id: " + t.id);
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<GoldAnnotation> read_gold(const std::filesystem::path& path) {
  std::vector<GoldAnnotation> out;
  std::set<std::string> seen;
  for_each_record(path, [&](const json& rec, std::size_t) {
    GoldAnnotation g;
    g.qid = rec.at("qid").get<std::string>();
    g.question = rec.at("question").get<std::string>();
    g.answers = rec.value("answers", std::vector<std::string>{});
    g.gold_chunks = rec.value("gold_chunks", std::vector<std::string>{});
    for (const auto& l : rec.value("gold_links", json::array())) {
      GoldLink link;
      link.chunk_id = l.at("chunk_id").get<std::string>();
      link.start = l.at("start").get<std::size_t>();
      link.end = l.at("end").get<std::size_t>();
      link.passage_id = l.at("passage_id").get<std::string>();
      if (link.end < link.start) throw ValidationError("gold link with end < start");
      g.gold_links.push_back(std::move(link));
    }
    if (!seen.insert(g.qid).second) throw ValidationError("duplicate qid: " + g.qid);
    out.push_back(std::move(g));
  });
  return out;
}

CorpusStore load_corpus(const std::filesystem::path& passages_path, const std::filesystem::path& tables_path,
                        std::size_t budget_words) {
  return CorpusStore(read_passages(passages_path), read_tables(tables_path), budget_words);
}

void write_corpus_dir(const CorpusStore& store, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<json> lines;
  for (const auto& p : store.passages()) lines.push_back({{"id", p.id}, {"title", p.title}, {"text", p.text}});
  write_lines(dir / "passages.jsonl", lines);

  lines.clear();
  for (const auto& t : store.tables()) {
    lines.push_back({{"id", t.id}, {"title", t.title}, {"header", t.header}, {"rows", t.rows}});
  }
  write_lines(dir / "tables.jsonl", lines);

  lines.clear();
  for (const auto& c : store.chunks()) {
    lines.push_back({{"chunk_id", c.chunk_id},
                     {"table_id", c.table_id},
                     {"text", c.text},
                     {"word_count", c.word_count},
                     {"row_range", {c.first_row, c.last_row}},
                     {"cell_map", cell_map_json(c.cell_map)}});
  }
  write_lines(dir / "chunks.jsonl", lines);

  auto counts = store.counts();
  json manifest = {{"budget_words", store.budget_words()},
                   {"passages", counts.passages},
                   {"tables", counts.tables},
                   {"chunks", counts.chunks}};
  write_lines(dir / "manifest.json", {manifest});
}

CorpusStore load_corpus_dir(const std::filesystem::path& dir) {
  std::size_t budget = kDefaultChunkBudget;
  auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    auto in = open_input(manifest_path);
    try {
      budget = json::parse(in).value("budget_words", kDefaultChunkBudget);
    } catch (const json::exception& e) {
      throw ValidationError(manifest_path.string() + ": " + e.what());
    }
  }
  return load_corpus(dir / "passages.jsonl", dir / "tables.jsonl", budget);
}

void validate_gold(const std::vector<GoldAnnotation>& gold, const CorpusStore& store) {
  for (const auto& g : gold) {
    for (const auto& id : g.gold_chunks) {
      if (!store.find_chunk(id)) throw ValidationError("question " + g.qid + ": unknown gold chunk " + id);
    }
    for (const auto& link : g.gold_links) {
      const auto* chunk = store.find_chunk(link.chunk_id);
      if (!chunk) throw ValidationError("question " + g.qid + ": unknown link chunk " + link.chunk_id);
      if (!store.find_passage(link.passage_id)) {
        throw ValidationError("question " + g.qid + ": unknown link passage " + link.passage_id);
      }
      const auto* cell = cell_at_token(chunk->cell_map, link.start);
      if (!cell || link.end >= cell->token_end) {
        throw ValidationError("question " + g.qid + ": link span [" + std::to_string(link.start) + ", " +
                              std::to_string(link.end) + "] is not inside one cell of " + link.chunk_id);
      }
    }
  }
}

}  // namespace core
