#include "convsim/corpus_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "convsim/error.hpp"
#include "json.hpp"

namespace convsim {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kEdgeSlack = 1e-3;  // 1 ms tolerance on span invariants

bool known_transition(const std::string& t) {
  return t == "TH" || t == "TS" || t == "IR" || t == "BC";
}

ordered_json utterance_to_json(const SourceUtterance& u) {
  ordered_json j;
  j["id"] = u.id;
  j["speaker"] = u.speaker_id;
  j["audio"] = {{"path", u.audio.path.string()},
                {"offset", u.audio.offset},
                {"duration", u.audio.duration}};
  j["sample_rate"] = u.sample_rate;
  if (!u.words.empty()) {
    ordered_json words = ordered_json::array();
    for (const Word& w : u.words) {
      words.push_back(ordered_json::array({w.token, w.start, w.end}));
    }
    j["words"] = std::move(words);
  }
  if (!u.text.empty()) j["text"] = u.text;
  return j;
}

SourceUtterance utterance_from_json(const ordered_json& j) {
  SourceUtterance u;
  u.id = j.at("id").get<std::string>();
  u.speaker_id = j.at("speaker").get<std::string>();
  const auto& audio = j.at("audio");
  u.audio.path = audio.at("path").get<std::string>();
  u.audio.offset = audio.at("offset").get<double>();
  u.audio.duration = audio.at("duration").get<double>();
  u.sample_rate = j.at("sample_rate").get<int>();
  if (j.contains("words")) {
    for (const auto& wj : j.at("words")) {
      if (!wj.is_array() || wj.size() != 3) {
        throw std::runtime_error("word entries must be [token, start, end]");
      }
      Word w;
      w.token = wj[0].get<std::string>();
      w.start = wj[1].get<double>();
      w.end = wj[2].get<double>();
      u.words.push_back(std::move(w));
    }
  }
  if (j.contains("text")) u.text = j.at("text").get<std::string>();
  return u;
}

ordered_json supervision_to_json(const Supervision& s) {
  ordered_json j;
  j["speaker"] = s.speaker_id;
  j["onset"] = s.onset;
  j["duration"] = s.duration;
  j["source_id"] = s.source_utterance_id;
  j["transition"] = s.transition;
  if (!s.text.empty()) j["text"] = s.text;
  return j;
}

Supervision supervision_from_json(const ordered_json& j) {
  Supervision s;
  s.speaker_id = j.at("speaker").get<std::string>();
  s.onset = j.at("onset").get<double>();
  s.duration = j.at("duration").get<double>();
  s.source_utterance_id = j.at("source_id").get<std::string>();
  s.transition = j.at("transition").get<std::string>();
  if (j.contains("text")) s.text = j.at("text").get<std::string>();
  return s;
}

// Runs fn over non-blank lines, converting json/type errors into ParseError
// with the 1-based line number. Validation errors pass through untouched.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

void SourceUtterance::validate() const {
  auto fail = [this](const std::string& msg) {
    throw ValidationError("utterance '" + id + "': " + msg);
  };
  if (id.empty()) throw ValidationError("utterance with empty id");
  if (speaker_id.empty()) fail("empty speaker");
  if (audio.path.empty()) fail("empty audio path");
  if (!(audio.duration > 0.0)) fail("duration must be positive");
  if (audio.offset < 0.0) fail("offset must be non-negative");
  if (sample_rate <= 0) fail("sample_rate must be positive");
  for (std::size_t i = 0; i < words.size(); ++i) {
    const Word& w = words[i];
    if (w.end < w.start) fail("word " + std::to_string(i) + " ends before it starts");
    if (i + 1 < words.size() && words[i + 1].start < w.end) {
      fail("words " + std::to_string(i) + " and " + std::to_string(i + 1) + " overlap");
    }
  }
  if (!words.empty()) {
    if (words.front().start < -kEdgeSlack) fail("first word starts before the utterance");
    if (words.back().end > audio.duration + kEdgeSlack) fail("last word ends past the utterance");
  }
}

void SessionManifest::validate() const {
  auto fail = [this](const std::string& msg) {
    throw ValidationError("session '" + session_id + "': " + msg);
  };
  if (session_id.empty()) throw ValidationError("session with empty id");
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (duration < 0.0) fail("negative duration");
  std::map<std::string, std::vector<std::pair<double, double>>> by_speaker;
  for (const Supervision& s : supervisions) {
    if (s.onset < 0.0) fail("supervision of '" + s.speaker_id + "' has negative onset");
    if (s.duration < 0.0) fail("supervision of '" + s.speaker_id + "' has negative duration");
    if (s.onset + s.duration > duration + kEdgeSlack) {
      fail("supervision of '" + s.speaker_id + "' runs past the session end");
    }
    if (!known_transition(s.transition)) {
      fail("unknown transition '" + s.transition + "'");
    }
    by_speaker[s.speaker_id].emplace_back(s.onset, s.onset + s.duration);
  }
  for (auto& [speaker, spans] : by_speaker) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first < spans[i - 1].second - 1e-6) {
        fail("speaker '" + speaker + "' overlaps with themselves");
      }
    }
  }
}

std::vector<SpeakerPool> load_utterance_manifest(const std::filesystem::path& path) {
  std::vector<SpeakerPool> pools;
  std::map<std::string, std::size_t> index;  // speaker -> pool slot
  for_each_json_line(path, [&](const ordered_json& j) {
    SourceUtterance u = utterance_from_json(j);
    u.validate();
    auto [it, fresh] = index.emplace(u.speaker_id, pools.size());
    if (fresh) pools.push_back(SpeakerPool{u.speaker_id, {}});
    pools[it->second].utterances.push_back(std::move(u));
  });
  return pools;
}

void write_utterance_manifest(const std::filesystem::path& path, const std::vector<SpeakerPool>& pools) {
  std::ofstream out = open_for_write(path);
  for (const SpeakerPool& pool : pools) {
    for (const SourceUtterance& u : pool.utterances) {
      out << utterance_to_json(u).dump() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string session_to_json_line(const SessionManifest& session) {
  ordered_json j;
  j["session_id"] = session.session_id;
  j["audio_path"] = session.audio_path;
  j["duration"] = session.duration;
  j["sample_rate"] = session.sample_rate;
  ordered_json sup = ordered_json::array();
  for (const Supervision& s : session.supervisions) sup.push_back(supervision_to_json(s));
  j["supervisions"] = std::move(sup);
  return j.dump();
}

SessionManifest session_from_json_line(const std::string& line) {
  ordered_json j = ordered_json::parse(line);
  SessionManifest m;
  m.session_id = j.at("session_id").get<std::string>();
  m.audio_path = j.at("audio_path").get<std::string>();
  m.duration = j.at("duration").get<double>();
  m.sample_rate = j.at("sample_rate").get<int>();
  for (const auto& sj : j.at("supervisions")) {
    m.supervisions.push_back(supervision_from_json(sj));
  }
  return m;
}

std::vector<SessionManifest> load_session_manifest(const std::filesystem::path& path) {
  std::vector<SessionManifest> sessions;
  for_each_json_line(path, [&](const ordered_json& j) {
    SessionManifest m = session_from_json_line(j.dump());
    m.validate();
    sessions.push_back(std::move(m));
  });
  return sessions;
}

void write_session_manifest(const std::filesystem::path& path, const std::vector<SessionManifest>& sessions) {
  std::ofstream out = open_for_write(path);
  for (const SessionManifest& m : sessions) out << session_to_json_line(m) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SourceUtterance> split_at_pauses(const SourceUtterance& utt, double min_pause) {
  if (!(min_pause > 0.0)) throw ValidationError("min_pause must be positive");
  if (utt.words.empty()) return {utt};

  // Cut after word i when the silence to the next word is long enough.
  std::vector<std::size_t> last_word_of_piece;
  std::vector<double> cut_time;
  for (std::size_t i = 0; i + 1 < utt.words.size(); ++i) {
    const double gap = utt.words[i + 1].start - utt.words[i].end;
    if (gap >= min_pause) {
      last_word_of_piece.push_back(i);
      cut_time.push_back((utt.words[i].end + utt.words[i + 1].start) / 2.0);
    }
  }
  if (last_word_of_piece.empty()) return {utt};
  last_word_of_piece.push_back(utt.words.size() - 1);

  const double cap = min_pause / 2.0;
  std::vector<SourceUtterance> out;
  std::size_t first = 0;
  for (std::size_t k = 0; k < last_word_of_piece.size(); ++k) {
    const std::size_t last = last_word_of_piece[k];
    const double voiced_start = utt.words[first].start;
    const double voiced_end = utt.words[last].end;
    double left = std::max(0.0, voiced_start - cap);
    if (k > 0) left = std::max(left, cut_time[k - 1]);
    double right = std::min(utt.audio.duration, voiced_end + cap);
    if (k < cut_time.size()) right = std::min(right, cut_time[k]);

    SourceUtterance piece;
    piece.id = utt.id + "#" + std::to_string(k);
    piece.speaker_id = utt.speaker_id;
    piece.audio.path = utt.audio.path;
    piece.audio.offset = utt.audio.offset + left;
    piece.audio.duration = right - left;
    piece.sample_rate = utt.sample_rate;
    std::string text;
    for (std::size_t i = first; i <= last; ++i) {
      const Word& w = utt.words[i];
      piece.words.push_back(Word{w.token, w.start - left, w.end - left});
      if (!text.empty()) text += ' ';
      text += w.token;
    }
    piece.text = std::move(text);
    out.push_back(std::move(piece));
    first = last + 1;
  }
  return out;
}

std::vector<std::filesystem::path> load_noise_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open noise manifest: " + path.string());
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const std::size_t e = line.find_last_not_of(" \t\r");
    std::filesystem::path p(line.substr(b, e - b + 1));
    if (p.is_relative()) p = base / p;
    out.push_back(std::move(p));
  }
  return out;
}

void write_rttm(const SessionManifest& manifest, std::ostream& out) {
  std::vector<const Supervision*> order;
  order.reserve(manifest.supervisions.size());
  for (const Supervision& s : manifest.supervisions) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Supervision* a, const Supervision* b) {
    if (a->onset != b->onset) return a->onset < b->onset;
    return a->speaker_id < b->speaker_id;
  });
  for (const Supervision* s : order) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f %.3f", s->onset, s->duration);
    out << "SPEAKER " << manifest.session_id << " 1 " << buf << " <NA> <NA> " << s->speaker_id
        << " <NA> <NA>\n";
  }
}

void write_rttm_file(const SessionManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  write_rttm(manifest, out);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SessionManifest> load_rttm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rttm: " + path.string());
  std::vector<SessionManifest> sessions;
  std::map<std::string, std::size_t> index;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string kind, session_id, channel, onset_s, duration_s, f6, f7, speaker;
    if (!(fields >> kind >> session_id >> channel >> onset_s >> duration_s >> f6 >> f7 >> speaker) ||
        kind != "SPEAKER") {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed rttm line");
    }
    double onset = 0.0;
    double duration = 0.0;
    try {
      onset = std::stod(onset_s);
      duration = std::stod(duration_s);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad onset or duration");
    }
    auto [it, fresh] = index.emplace(session_id, sessions.size());
    if (fresh) {
      SessionManifest m;
      m.session_id = session_id;
      m.sample_rate = 1;  // unknown; rttm carries no rate
      sessions.push_back(std::move(m));
    }
    SessionManifest& m = sessions[it->second];
    Supervision s;
    s.speaker_id = speaker;
    s.onset = onset;
    s.duration = duration;
    s.transition = "TH";
    m.supervisions.push_back(std::move(s));
    m.duration = std::max(m.duration, onset + duration);
  }
  return sessions;
}

}  // namespace convsim
