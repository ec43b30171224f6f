#include "synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "qta/project.hpp"
#include "qta/text.hpp"
#include "qta/theming.hpp"

namespace qta::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// mt19937 output is specified by the standard; distributions are not.
struct Rng {
  explicit Rng(std::uint32_t seed) : g(seed) {}
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(g() % n); }
  template <class C>
  const auto& from(const C& c) {
    return c[pick(std::size(c))];
  }
  std::mt19937 g;
};

const std::vector<std::string> kGerunds = {"Navigating", "Managing", "Seeking", "Balancing",
                                           "Coordinating", "Explaining", "Protecting", "Rebuilding",
                                           "Sharing", "Questioning"};
const std::vector<std::string> kObjects = {"waiting lists", "school meetings", "medication changes",
                                           "family routines", "crisis plans", "peer groups",
                                           "sleep problems", "money worries", "staff turnover",
                                           "respite care", "online advice"};

std::string lower_first(std::string s) {
  if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z') s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

Concept make_concept(std::size_t k) {
  const std::string& g = kGerunds[k % kGerunds.size()];
  const std::string& o = kObjects[(k / kGerunds.size()) % kObjects.size()];
  Concept c;
  c.name = g + " " + o;
  c.variants = {c.name, "Difficulty " + lower_first(g) + " " + o, g + " " + o + " alone"};
  c.description = "Participants talk about " + lower_first(g) + " " + o +
                  " as part of ordinary family life, what makes it harder or easier, and how it "
                  "shapes their trust in services, their own wellbeing and the way "
                  "responsibilities are shared at home.";
  return c;
}

std::string variant_description(const Concept& c, std::size_t v) {
  static const std::vector<std::string> kLeads = {"Participants talk about", "Accounts of",
                                                  "Descriptions of"};
  std::string d = c.description;
  return kLeads[v % kLeads.size()] + d.substr(std::string("Participants talk about").size());
}

struct Voice {
  std::vector<std::string> openers;
  std::vector<std::string> details;
  std::vector<std::string> tails;
  std::vector<std::string> fillers;
  std::vector<std::string> intros;
};

const Voice& parent_voice() {
  static const Voice v{
      {"Honestly, the hardest part has been", "For us it always comes back to",
       "I would say most weeks are about", "What nobody tells you about is",
       "Looking back, a lot of my energy went into", "Some days it feels like we are just"},
      {"the letters arrive after the appointment has already gone",
       "my partner works nights and the children notice everything",
       "the school only calls when something has gone wrong",
       "every new worker asks the same questions again",
       "the forms assume you have a printer and a quiet hour",
       "we live two buses away from the clinic",
       "my mum helps but she is getting older herself",
       "the advice online changes from one month to the next"},
      {"so I keep a notebook of every call", "and that wears you down in a way that is hard to explain",
       "which means planning everything around the worst day",
       "and I have stopped expecting anyone to ring back", "so we try to laugh about it when we can",
       "and the children end up carrying some of that worry"},
      {"It is not always like that, to be fair.", "Some weeks are better than others.",
       "My sister says the same thing about her boys.", "I do not want to sound ungrateful.",
       "The staff are kind when you actually reach them.", "It adds up over a year, though.",
       "You would not know any of this from the outside.", "We get there in the end, mostly."},
      {"We are a family of four, and I have been looking after my son mostly on my own for the last three years.",
       "There are five of us at home, and my daughter was diagnosed when she was seven.",
       "It is me, my partner and the two children, and things changed a lot after the diagnosis."}};
  return v;
}

const Voice& practitioner_voice() {
  static const Voice v{
      {"In our service a lot of the work is", "With most families we end up",
       "The part of the job people underestimate is", "Week to week I spend more time",
       "If I am honest, the team is always", "From where I sit the real pressure is"},
      {"caseloads keep growing while the posts stay empty",
       "referrals come in with half the information missing",
       "families have already told their story to three other teams",
       "the funding is agreed one year at a time",
       "the nearest specialist clinic is an hour away by car",
       "we cannot offer anything after five in the evening",
       "the criteria change before anyone has read the last version",
       "parents are often working two jobs to keep things going"},
      {"so we write everything down twice", "and that is exhausting for everyone involved",
       "which means we mostly react rather than plan", "and good people leave because of it",
       "so we lean on each other a great deal", "and the families feel that straight away"},
      {"That is just the reality at the moment.", "Not every week is like that, of course.",
       "My colleagues would tell you the same.", "We do our best with what we have.",
       "I think managers know, but their hands are tied.", "It has been like this for a while now.",
       "Some families cope remarkably well despite it.", "You learn to pick your battles."},
      {"I have worked in family support for seven years, mostly with families referred by schools.",
       "I am a community nurse and I have been in this team for four years.",
       "I coordinate an early help service and still carry a small caseload myself."}};
  return v;
}

struct Plan {
  std::string prefix;
  std::size_t n_docs = 0;
  std::size_t n_codes = 0;
  std::size_t n_concepts = 0;
  std::size_t concept_offset = 0;
  std::uint32_t seed = 1;
  std::vector<std::size_t> ellipsis_codes;
  std::vector<std::size_t> edited_codes;
  std::size_t malformed_doc = static_cast<std::size_t>(-1);
};

std::string doc_id(const std::string& prefix, std::size_t i) {
  std::string n = std::to_string(i + 1);
  if (n.size() < 2) n = "0" + n;
  return prefix + n;
}

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  for (auto w : text::split_words(s)) out.emplace_back(w);
  return out;
}

std::string join_words(const std::vector<std::string>& w, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to && i < w.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += w[i];
  }
  return out;
}

// First nine words of `a`, an ellipsis, last seven words of `b`.
std::string ellipsis_quote(const std::string& a, const std::string& b) {
  const auto wa = words_of(a);
  const auto wb = words_of(b);
  return join_words(wa, 0, 9) + "... " + join_words(wb, wb.size() > 7 ? wb.size() - 7 : 0, wb.size());
}

std::string edited_quote(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  if (!s.empty() && s.back() == '.') s.back() = '!';
  return s;
}

Dataset build_interviews(const std::string& name, const std::string& group, const Voice& voice,
                         const Plan& plan) {
  Dataset d;
  d.name = name;
  d.group = group;
  for (std::size_t c = 0; c < plan.n_concepts; ++c) d.concepts.push_back(make_concept(plan.concept_offset + c));
  Rng rng(plan.seed);
  d.docs.resize(plan.n_docs);
  for (std::size_t k = 0; k < plan.n_docs; ++k) {
    d.docs[k].id = doc_id(plan.prefix, k);
    d.docs[k].malformed_first_reply = k == plan.malformed_doc;
    d.docs[k].text = "Interviewer: Thank you for taking part. Could you start by telling me a little about yourself?\n"
                     "Participant: " + rng.from(voice.intros) + "\n\n";
  }
  std::vector<std::size_t> occurrence(plan.n_concepts, 0);
  for (std::size_t i = 0; i < plan.n_codes; ++i) {
    const std::size_t cid = i % plan.n_concepts;
    const std::size_t v = occurrence[cid]++ % 3;
    PlannedDoc& doc = d.docs[i % plan.n_docs];
    const Concept& con = d.concepts[cid];
    const std::size_t k = plan.concept_offset + cid;
    const std::string& g = kGerunds[k % kGerunds.size()];
    const std::string& o = kObjects[(k / kGerunds.size()) % kObjects.size()];
    const std::string sentence = rng.from(voice.openers) + " " + lower_first(g) + " " + o + " " +
                                 std::string(rng.pick(2) ? "because" : "while") + " " +
                                 rng.from(voice.details) + ", " + rng.from(voice.tails) + ".";
    const std::string filler = rng.from(voice.fillers);
    doc.text += "Interviewer: What has " + lower_first(g) + " " + o + " been like?\n";
    doc.text += "Participant: " + sentence + " " + filler + "\n\n";
    doc.sentences.push_back(sentence);
    PlannedCode code{cid, con.variants[v], variant_description(con, v), sentence};
    if (std::find(plan.ellipsis_codes.begin(), plan.ellipsis_codes.end(), i) != plan.ellipsis_codes.end()) {
      code.quote = ellipsis_quote(sentence, filler);
    } else if (std::find(plan.edited_codes.begin(), plan.edited_codes.end(), i) != plan.edited_codes.end()) {
      code.quote = edited_quote(sentence);
    }
    doc.codes.push_back(std::move(code));
  }
  for (auto& doc : d.docs) {
    doc.text += "Interviewer: Is there anything else you would like to add?\n"
                "Participant: Only that it helps to be asked. Thank you.\n";
  }
  return d;
}

std::string theme_description(const std::string& name) {
  return name + " brings together codes about the practical and emotional work behind everyday "
                "support. It covers what participants do to keep things going, the obstacles they "
                "meet in services and at home, and the small arrangements that make a difference. "
                "The theme matters for the research question because it shows where support is "
                "experienced as reliable and where it breaks down.";
}

std::vector<ThemePlan> contiguous_themes(const std::vector<std::string>& names,
                                         const std::vector<std::size_t>& sizes) {
  std::vector<ThemePlan> out;
  std::size_t next = 0;
  for (std::size_t t = 0; t < names.size(); ++t) {
    ThemePlan p{names[t], theme_description(names[t]), {}};
    for (std::size_t k = 0; k < sizes[t]; ++k) p.members.push_back(next++);
    out.push_back(std::move(p));
  }
  return out;
}

std::string baseline_reply(const Dataset& d) {
  // Seven invented quotations and one stitched from two real fragments.
  const PlannedDoc& src = d.docs.at(2);
  const std::string stitched = ellipsis_quote(src.sentences.at(0), src.sentences.at(1));
  const std::vector<std::string> quotes = {
      "We were promised a key worker and then nobody came for a whole term",
      "The consultant spoke to my son as if I was not even in the room",
      stitched,
      "I only found the carers grant because another mum posted about it at midnight",
      "Every holiday club said they could not take a child with his needs",
      "My employer let me work from home and that saved our family",
      "The pharmacy ran out twice and nobody could tell us why",
      "Grandparents are the real respite service in this country"};
  const std::vector<std::pair<std::string, int>> themes = {
      {"Fighting for Recognition", 9}, {"Information Overload", 7}, {"Carrying the Load Alone", 10},
      {"Gaps in Practical Help", 8},   {"Work and Money Pressures", 6}, {"Family as the Safety Net", 5}};
  std::string out =
      "Thematic Analysis Summary\n\nThis summary draws on interviews with 12 parents caring for a "
      "child with a long-term condition. The transcripts were read in full, initial codes were "
      "generated across the dataset, and related codes were grouped into six themes. Each theme is "
      "described below with the number of participants whose accounts contributed to it and "
      "illustrative quotations.\n\n";
  std::size_t q = 0;
  for (std::size_t t = 0; t < themes.size(); ++t) {
    const auto& [name, n] = themes[t];
    out += "Theme " + std::to_string(t + 1) + ": " + name + " (" + std::to_string(n) +
           " of 12 participants)\n\n";
    out += "Parents described " + lower_first(name) +
           " as a constant feature of daily life. Several accounts linked this to practical "
           "barriers, such as travel, appointment times and the cost of taking time off work, and "
           "to the emotional effort of repeating their story to new professionals. As one parent "
           "put it, ";
    const bool curly = t % 2 == 0;
    const auto quoted = [&](const std::string& s) {
      return curly ? "“" + s + "”" : "\"" + s + "\"";
    };
    out += quoted(quotes[q++]) + ". ";
    out += "Others emphasised that small gestures from staff made a large difference, for example "
           "a phone call before a difficult meeting or a letter written in plain language. ";
    if (t < 2) out += "Another participant added, " + quoted(quotes[q++]) + ". ";
    out += "Taken together, these accounts suggest that support works best when it is predictable, "
           "personal and shared across the family.\n\n";
  }
  out += "Conclusion\n\nAcross the six themes, parents portrayed themselves as coordinators of "
         "care who absorb the gaps between services. The findings point to the value of a named "
         "contact, clearer information at diagnosis and flexible practical support. These themes "
         "are consistent across participants, although the intensity of the experience varied "
         "with family circumstances, employment and the availability of relatives nearby.\n";
  return out;
}

}  // namespace

Dataset parents_dataset() {
  Plan p;
  p.prefix = "p";
  p.n_docs = 12;
  p.n_codes = 146;
  p.n_concepts = 52;
  p.concept_offset = 0;
  p.seed = 20240611;
  p.ellipsis_codes = {5, 40, 77, 120};
  p.edited_codes = {60, 99};
  p.malformed_doc = 4;
  Dataset d = build_interviews("parents", "parents", parent_voice(), p);
  d.themes = contiguous_themes({"Living with uncertainty", "Working around services",
                                "Holding the family together", "Finding trusted information",
                                "Carrying the emotional load", "Building support networks",
                                "Negotiating school life", "Planning for the future"},
                               {8, 8, 8, 6, 7, 5, 5, 5});
  d.themes.back().members.push_back(0);  // one shared code
  d.baseline_reply = baseline_reply(d);
  return d;
}

Dataset practitioners_dataset() {
  Plan p;
  p.prefix = "t";
  p.n_docs = 21;
  p.n_codes = 115;
  p.n_concepts = 49;
  p.concept_offset = 52;
  p.seed = 20240612;
  Dataset d = build_interviews("practitioners", "practitioners", practitioner_voice(), p);
  // Concepts 45..48 are left out of every theme.
  d.themes = contiguous_themes({"Working across agencies", "Holding risk and uncertainty",
                                "Stretching limited resources", "Building trust with families",
                                "Supporting staff wellbeing", "Adapting practice to context"},
                               {8, 8, 7, 7, 7, 8});
  return d;
}

Dataset hierarchy_dataset() {
  Dataset d;
  d.name = "hierarchy";
  d.group = "combined";
  for (std::size_t c = 0; c < 84; ++c) d.concepts.push_back(make_concept(c));
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < 16; ++s) {
    sizes.push_back(s < 4 ? 6 : 5);
  }
  std::size_t next = 0;
  for (std::size_t s = 0; s < 16; ++s) {
    names.push_back(d.concepts[next].name);
    next += sizes[s];
  }
  d.themes = contiguous_themes(names, sizes);
  const std::vector<std::string> parents = {
      "Coping with system delays",  "Keeping families connected",   "Making sense of advice",
      "Sharing the caring load",    "Protecting children's routines", "Finding the right help",
      "Living with financial strain", "Learning from other families", "Working with changing staff",
      "Preparing for what comes next"};
  // Sub-theme 10 is listed under two parents.
  const std::vector<std::vector<std::size_t>> members = {{0, 1},   {2, 3},  {4, 5}, {6, 7}, {8, 9},
                                                         {10, 11}, {12},    {13},   {14, 10}, {15}};
  for (std::size_t k = 0; k < parents.size(); ++k) {
    d.parent_themes.push_back({parents[k], theme_description(parents[k]), members[k]});
  }
  return d;
}

ScriptedModel::ScriptedModel(const Dataset& data) : data_(data) {
  for (std::size_t c = 0; c < data_.concepts.size(); ++c) {
    for (const auto& v : data_.concepts[c].variants) name_to_concept_[v] = c;
  }
}

std::size_t ScriptedModel::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

HttpReply ScriptedModel::post_chat(const std::string& body) {
  const json req = json::parse(body);
  const std::string prompt = req.at("messages").back().at("content").get<std::string>();
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  const json reply = {{"id", "synthetic"},
                      {"object", "chat.completion"},
                      {"model", req.value("model", "")},
                      {"choices",
                       json::array({{{"index", 0},
                                     {"message", {{"role", "assistant"}, {"content", respond(prompt)}}},
                                     {"finish_reason", "stop"}}})}};
  return {200, reply.dump()};
}

std::optional<std::size_t> ScriptedModel::concept_of(const std::string& name) const {
  auto it = name_to_concept_.find(name);
  if (it == name_to_concept_.end()) return std::nullopt;
  return it->second;
}

std::string ScriptedModel::respond(const std::string& prompt) {
  if (prompt.find("generate a comprehensive set of initial codes") != std::string::npos) return code_reply(prompt);
  if (prompt.find("Compare the following target code") != std::string::npos) return duplicate_reply(prompt);
  if (prompt.find("list of sub-themes") != std::string::npos) return parents_reply(prompt);
  if (prompt.find("sort and group them into") != std::string::npos) return themes_reply(prompt);
  if (prompt.find("have been merged") != std::string::npos) return rationale_reply(prompt);
  if (prompt.find("Undertake thematic analysis") != std::string::npos) return data_.baseline_reply;
  return "I am not sure what you would like me to do with this text.";
}

std::string ScriptedModel::code_reply(const std::string& prompt) {
  const bool repair = prompt.size() >= kRepairInstruction.size() &&
                      prompt.compare(prompt.size() - kRepairInstruction.size(), kRepairInstruction.size(),
                                     kRepairInstruction) == 0;
  for (const auto& doc : data_.docs) {
    if (prompt.find(doc.text) == std::string::npos) continue;
    if (doc.malformed_first_reply && !repair) {
      return "I have analysed the interview. The codes are as follows:\n\n{\"final_codes\": [\n  {\"code_name\": \"" +
             doc.codes.front().name + "\",";
    }
    json codes = json::array();
    for (const auto& c : doc.codes) {
      codes.push_back({{"code_name", c.name}, {"description", c.description}, {"quote", c.quote}});
    }
    if (repair) return json{{"final_codes", codes}}.dump(2);
    return "Here are the initial codes for this interview.\n\n```json\n" +
           json{{"final_codes", codes}}.dump(2) + "\n```\n";
  }
  return "{\"final_codes\": []}";
}

std::string ScriptedModel::duplicate_reply(const std::string& prompt) const {
  const std::string open = "\"code\": \"";
  const auto a = prompt.find(open);
  const auto b = prompt.find("\",\n  \"description\"", a);
  const std::string target = json::parse("\"" + prompt.substr(a + open.size(), b - a - open.size()) + "\"");
  const std::string head = "Comparison Codes:\n\n";
  const auto c = prompt.find(head);
  const auto e = prompt.find("\n\nRespond with a JSON object in this exact format", c);
  const json cmp = json::parse(prompt.substr(c + head.size(), e - c - head.size()));
  const auto tc = concept_of(target);
  std::string out = "```json\n{\n  \"comparisons\": {\n";
  for (std::size_t i = 1; i <= cmp.size(); ++i) {
    const std::string key = "code_id_" + std::to_string(i);
    const auto cc = concept_of(cmp.at(key).at("code").get<std::string>());
    const bool same = tc && cc && *tc == *cc;
    out += "    \"" + key + "\": " + (same ? "True" : "False") + (i < cmp.size() ? ",\n" : "\n");
  }
  return out + "  }\n}\n```";
}

namespace {

// "[i] name: description" lines after `marker`.
std::vector<std::string> listed_names(const std::string& prompt, const std::string& marker) {
  std::vector<std::string> out;
  const auto start = prompt.find(marker);
  if (start == std::string::npos) return out;
  std::size_t pos = start + marker.size();
  while (pos < prompt.size()) {
    auto end = prompt.find('\n', pos);
    if (end == std::string::npos) end = prompt.size();
    const std::string line = prompt.substr(pos, end - pos);
    pos = end + 1;
    if (line.size() < 3 || line[0] != '[') continue;
    const auto close = line.find("] ");
    const auto colon = line.find(": ", close);
    if (close == std::string::npos || colon == std::string::npos) continue;
    out.push_back(line.substr(close + 2, colon - close - 2));
  }
  return out;
}

}  // namespace

std::string ScriptedModel::themes_reply(const std::string& prompt) const {
  const auto names = listed_names(prompt, "LIST OF CODES: ");
  json themes = json::array();
  for (const auto& t : data_.themes) {
    json codes = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto c = concept_of(names[i]);
      if (c && std::find(t.members.begin(), t.members.end(), *c) != t.members.end()) codes.push_back(i);
    }
    themes.push_back({{"name", t.name}, {"description", t.description}, {"codes", codes}});
  }
  return "```json\n" + json{{"themes", themes}}.dump(2) + "\n```";
}

std::string ScriptedModel::parents_reply(const std::string&) const {
  json themes = json::array();
  for (const auto& t : data_.parent_themes) {
    themes.push_back({{"name", t.name}, {"description", t.description}, {"subthemes", t.members}});
  }
  return json{{"themes", themes}}.dump(2);
}

std::string ScriptedModel::rationale_reply(const std::string& prompt) const {
  const std::string key = "Kept code: ";
  const auto a = prompt.find(key);
  const auto b = prompt.find('\n', a);
  const std::string kept = prompt.substr(a + key.size(), b - a - key.size());
  return "Both codes describe " + lower_first(kept) +
         ", so the merged code keeps the earlier label and carries both quotes forward.";
}

namespace {

void write_corpus(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& doc : d.docs) text::write_file_atomic(dir / (doc.id + ".txt"), doc.text);
}

void strip_run_state(const fs::path& dir) {
  for (const char* p : {"artifacts", "report", "trail", "state.json", ".qta.lock"}) fs::remove_all(dir / p);
}

ProjectConfig base_config(const std::string& pattern, const std::string& group) {
  ProjectConfig cfg;
  cfg.corpus_root = "corpus";
  cfg.groups = {{pattern, group}};
  cfg.research_question = std::string(kResearchQuestion);
  cfg.model = "gpt-4o";
  cfg.mode = GatewayMode::replay;
  cfg.validation.min_quote_words = 15;
  cfg.seed = 11;
  return cfg;
}

void record_project(const Dataset& d, const fs::path& dir, const ProjectConfig& cfg,
                    const std::vector<Stage>& stages, bool baseline) {
  fs::remove_all(dir);
  write_corpus(d, dir / "corpus");
  Project p = Project::init(dir, cfg);
  RunOptions o;
  o.mode = GatewayMode::record;
  o.transport = std::make_shared<ScriptedModel>(d);
  for (Stage s : stages) p.run(s, o);
  if (baseline) p.run_baseline(o);
  strip_run_state(dir);
}

void generate_recorded_duplicates(const Dataset& d, const fs::path& file) {
  json pairs = json::array();
  for (const auto& c : d.concepts) {
    for (std::size_t i = 0; i < c.variants.size(); ++i) {
      for (std::size_t j = i + 1; j < c.variants.size(); ++j) pairs.push_back({c.variants[i], c.variants[j]});
    }
  }
  write_json(file, {{"duplicates", pairs}});
}

void generate_hierarchy_fixture(const Dataset& d, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir / "cache");
  std::vector<UniqueCode> codes;
  json arr = json::array();
  for (std::size_t c = 0; c < d.concepts.size(); ++c) {
    UniqueCode u;
    u.code_name = d.concepts[c].name;
    u.description = d.concepts[c].description;
    const std::string ref = "h" + std::to_string(c / 4 + 1) + "#" + std::to_string(c % 4);
    u.quotes = {{"We talked about " + lower_first(u.code_name) + " for most of the session.",
                 ref.substr(0, ref.find('#'))}};
    u.members = {ref};
    arr.push_back(to_json(u));
    codes.push_back(std::move(u));
  }
  write_json(dir / "unique_codes.json", arr);
  const json settings = {{"research_question", kResearchQuestion}, {"model", "gpt-4o"}, {"n_sub", 14}, {"n_top", 10}};
  write_json(dir / "settings.json", settings);
  GatewayOptions go;
  go.mode = GatewayMode::record;
  go.cache_dir = dir / "cache";
  Gateway gw(go, std::make_shared<ScriptedModel>(d));
  const PromptSet ps;
  HierarchyOptions h;
  h.theming.params = theming_params("gpt-4o");
  h.theming.research_question = std::string(kResearchQuestion);
  h.theming.prompt_template = ps.get(PromptId::themes);
  h.n_sub = 14;
  h.n_top = 10;
  h.subtheme_template = ps.get(PromptId::subthemes);
  generate_hierarchy(codes, gw, h);
}

void generate_audit21(const Dataset& parents, const fs::path& dir) {
  fs::remove_all(dir);
  json quotes = json::array();
  std::size_t verbatim = 0;
  std::size_t ordinal = 0;
  for (const auto& doc : parents.docs) {
    for (std::size_t k = 0; k < doc.sentences.size() && verbatim < 17; ++k) {
      if (ordinal++ % 8 != 0) continue;
      std::string q = doc.sentences[k];
      if (verbatim % 6 == 0) q = "“" + q + "”";
      quotes.push_back({{"code_ref", doc.id + "#" + std::to_string(k)}, {"quote", q}, {"constructed_as", "verbatim"}});
      ++verbatim;
    }
  }
  for (std::size_t e = 0; e < 4; ++e) {
    const auto& doc = parents.docs[3 * e + 1];
    const std::size_t k = 2;
    quotes.push_back({{"code_ref", doc.id + "#" + std::to_string(k) + ":ellipsis"},
                      {"quote", ellipsis_quote(doc.sentences[k], doc.sentences[k + 1])},
                      {"constructed_as", "ellipsis"}});
  }
  write_json(dir / "quotes.json", {{"corpus", "../parents/corpus"}, {"seed", 21}, {"quotes", quotes}});
}

void generate_ellipsis_passage(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir / "corpus");
  const std::string doc =
      "Interviewer: What gets in the way of families taking part?\n"
      "Participant: Then there comes the issue with we want parents to attend group work at our group "
      "therapy program but there's never any childcare... or school holidays or whatever, I mean, that "
      "again is a basic that if- we need to be able to provide. And transport is the other one, "
      "honestly.\n";
  text::write_file_atomic(dir / "corpus" / "s01.txt", doc);
  write_json(dir / "quotes.json",
             {{"system_quote",
               "We want parents to attend group work at our group therapy program but there's never any "
               "childcare... we need to be able to provide."},
              {"edited_quote",
               "Then there comes the issue with we want parents to attend group work at our group therapy "
               "program but there's never any childcare, or school holidays, or whatever. I mean, that "
               "again is a basic."}});
}

}  // namespace

void generate_all(const fs::path& root) {
  fs::create_directories(root);
  const Dataset parents = parents_dataset();
  ProjectConfig pc = base_config("p*.txt", "parents");
  pc.rationale = true;
  record_project(parents, root / "parents", pc,
                 {Stage::ingest, Stage::code, Stage::dedup, Stage::themes, Stage::audit, Stage::report}, true);
  generate_recorded_duplicates(parents, root / "parents" / "recorded_duplicates.json");

  const Dataset practitioners = practitioners_dataset();
  record_project(practitioners, root / "practitioners", base_config("t*.txt", "practitioners"),
                 {Stage::ingest, Stage::code, Stage::dedup, Stage::themes}, false);

  generate_hierarchy_fixture(hierarchy_dataset(), root / "hierarchy");
  generate_audit21(parents, root / "audit21");
  generate_ellipsis_passage(root / "ellipsis_passage");
}

}  // namespace qta::synth
