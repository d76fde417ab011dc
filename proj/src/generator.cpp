#include "globalrag/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "globalrag/errors.hpp"
#include "globalrag/jsonl.hpp"
#include "globalrag/question_templates.hpp"

namespace globalrag {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary

constexpr std::array<std::string_view, 23> kDomains{
    "Software Engineering", "Data Science", "Finance", "Accounting", "Marketing", "Sales",
    "Human Resources", "Healthcare", "Nursing", "Education", "Legal", "Mechanical Engineering",
    "Civil Engineering", "Electrical Engineering", "Design", "Operations", "Supply Chain",
    "Customer Service", "Consulting", "Cybersecurity", "Project Management", "Hospitality",
    "Journalism"};

using Words = std::vector<std::string_view>;

const std::map<std::string_view, Words>& domain_skills() {
  static const std::map<std::string_view, Words> pools{
      {"Software Engineering",
       {"Python", "Java", "C++", "Go", "JavaScript", "React", "TypeScript", "Node.js", "Docker",
        "Kubernetes", "AWS", "Git", "Microservices", "System Design"}},
      {"Data Science",
       {"Python", "R", "SQL", "Machine Learning", "Deep Learning", "TensorFlow", "PyTorch",
        "Scikit-learn", "Statistics", "Data Visualization", "NLP", "Tableau"}},
      {"Finance",
       {"Financial Modeling", "Valuation", "Forecasting", "Budgeting", "Excel", "Bloomberg",
        "Risk Analysis", "Portfolio Management", "SQL"}},
      {"Accounting",
       {"GAAP", "Auditing", "Tax Preparation", "QuickBooks", "Budgeting", "Excel",
        "Reconciliation", "Payroll", "Forecasting"}},
      {"Marketing",
       {"SEO", "SEM", "Content Marketing", "Google Analytics", "Social Media Marketing",
        "Brand Strategy", "Copywriting", "Email Campaigns", "Market Research"}},
      {"Sales",
       {"Salesforce", "Lead Generation", "Account Management", "CRM", "Cold Calling",
        "Pipeline Management", "Negotiation", "Forecasting"}},
      {"Human Resources",
       {"Recruiting", "Onboarding", "Payroll", "Employee Relations", "Performance Reviews", "HRIS",
        "Benefits Administration", "Coaching"}},
      {"Healthcare",
       {"Patient Care", "EHR", "Clinical Documentation", "HIPAA", "Medical Coding", "Triage",
        "Phlebotomy", "Case Management"}},
      {"Nursing",
       {"Patient Care", "Triage", "Phlebotomy", "IV Therapy", "Wound Care", "EHR",
        "Clinical Documentation", "Medication Administration"}},
      {"Education",
       {"Curriculum Design", "Lesson Planning", "Classroom Management", "Tutoring",
        "Assessment Design", "E-Learning", "Special Education"}},
      {"Legal",
       {"Legal Research", "Contract Drafting", "Litigation", "Compliance", "Due Diligence",
        "Intellectual Property", "Negotiation"}},
      {"Mechanical Engineering",
       {"SolidWorks", "AutoCAD", "CATIA", "Finite Element Analysis", "Thermodynamics", "MATLAB",
        "Prototyping", "GD&T"}},
      {"Civil Engineering",
       {"AutoCAD", "Revit", "Structural Analysis", "Surveying", "Geotechnical Engineering",
        "Construction Management", "MATLAB"}},
      {"Electrical Engineering",
       {"Circuit Design", "PCB Layout", "MATLAB", "Embedded Systems", "VHDL", "Power Systems",
        "Signal Processing"}},
      {"Design",
       {"Figma", "Adobe Photoshop", "Illustrator", "UX Research", "Prototyping", "Typography",
        "Wireframing", "HTML", "CSS"}},
      {"Operations",
       {"Lean Six Sigma", "Process Improvement", "Logistics", "Inventory Management", "ERP",
        "Vendor Management", "Forecasting"}},
      {"Supply Chain",
       {"Procurement", "Logistics", "Inventory Management", "SAP", "Demand Planning",
        "Vendor Management", "ERP"}},
      {"Customer Service",
       {"Zendesk", "CRM", "Conflict Resolution", "Call Center Operations", "Customer Retention",
        "Live Chat Support"}},
      {"Consulting",
       {"Stakeholder Management", "Business Analysis", "Market Research", "Financial Modeling",
        "Change Management", "PowerPoint"}},
      {"Cybersecurity",
       {"Penetration Testing", "SIEM", "Incident Response", "Network Security", "Threat Modeling",
        "Python", "AWS", "Cryptography"}},
      {"Project Management",
       {"Agile", "Scrum", "Jira", "Risk Analysis", "Budgeting", "Stakeholder Management", "PMP",
        "Kanban"}},
      {"Hospitality",
       {"Event Planning", "Guest Relations", "Food Safety", "Reservations Systems",
        "Revenue Management", "Housekeeping Management"}},
      {"Journalism",
       {"Investigative Reporting", "Copywriting", "Editing", "Fact-Checking", "Interviewing",
        "Social Media Marketing", "Photography"}},
  };
  return pools;
}

const Words kGenericSkills{"Communication",    "Microsoft Office", "Problem Solving",
                           "Negotiation",      "Public Speaking",  "Time Management",
                           "Excel",            "Team Leadership",  "Mentoring",
                           "Technical Writing", "Project Planning", "Stakeholder Management"};

const Words kFirstNames{"Alice",  "Bruno",  "Chen",   "Dana",   "Elena", "Farid",  "Grace",
                        "Hiro",   "Ines",   "Jamal",  "Kara",   "Liam",  "Maya",   "Nikolai",
                        "Olga",   "Pedro",  "Quinn",  "Rosa",   "Samir", "Tara",   "Umar",
                        "Vera",   "Wei",    "Ximena", "Yusuf",  "Zoe",   "Aaron",  "Bianca",
                        "Carlos", "Deepa",  "Emil",   "Fatima", "Gavin", "Hana",   "Ivan",
                        "Julia",  "Kenji",  "Leila",  "Marco",  "Nadia"};

const Words kLastNames{"Anderson", "Baker",    "Castillo", "Dubois",  "Eriksen", "Fischer",
                       "Garcia",   "Hoffman",  "Ibrahim",  "Jensen",  "Kowalski", "Lopez",
                       "Moreau",   "Nakamura", "Okafor",   "Patel",   "Quintero", "Rossi",
                       "Schmidt",  "Tanaka",   "Usman",    "Varga",   "Walsh",    "Xu",
                       "Yamamoto", "Zhang",    "Almeida",  "Brennan", "Costa",    "Delgado",
                       "Evans",    "Ferreira", "Gupta",    "Haddad",  "Ito",      "Jovanovic",
                       "Kim",      "Lindqvist", "Mendes",  "Novak"};

const Words kCities{"Seattle", "San Francisco", "Los Angeles", "Portland",  "San Diego",
                    "New York", "Boston",       "Miami",       "Philadelphia", "Baltimore",
                    "Chicago", "Minneapolis",   "Detroit",     "Austin",    "Dallas",
                    "Houston", "Denver",        "Atlanta",     "Phoenix"};

const Words kEducation{"Associate", "Bachelor", "Master", "PhD"};

/// A named group of attribute values used by semantic retrieval steps.
struct ValueGroup {
  std::string_view attribute;
  CompareOp op;
  std::string_view phrase;
  Words members;
};

const std::vector<ValueGroup>& value_groups() {
  static const std::vector<ValueGroup> groups{
      {"skills", CompareOp::contains_any, "have machine learning skills",
       {"Machine Learning", "Deep Learning", "TensorFlow", "PyTorch", "Scikit-learn", "NLP"}},
      {"skills", CompareOp::contains_any, "have cloud computing skills",
       {"AWS", "Docker", "Kubernetes", "Microservices"}},
      {"skills", CompareOp::contains_any, "have data analysis skills",
       {"SQL", "Excel", "Tableau", "Statistics", "Data Visualization", "Google Analytics"}},
      {"skills", CompareOp::contains_any, "have financial planning skills",
       {"Financial Modeling", "Valuation", "Forecasting", "Budgeting", "Risk Analysis"}},
      {"skills", CompareOp::contains_any, "have web development skills",
       {"JavaScript", "React", "TypeScript", "Node.js", "HTML", "CSS"}},
      {"skills", CompareOp::contains_any, "have clinical skills",
       {"Patient Care", "Triage", "Phlebotomy", "IV Therapy", "Wound Care",
        "Medication Administration"}},
      {"skills", CompareOp::contains_any, "have people management skills",
       {"Team Leadership", "Mentoring", "Coaching", "Performance Reviews",
        "Stakeholder Management"}},
      {"skills", CompareOp::contains_any, "have digital marketing skills",
       {"SEO", "SEM", "Content Marketing", "Social Media Marketing", "Email Campaigns"}},
      {"skills", CompareOp::contains_any, "have information security skills",
       {"Penetration Testing", "SIEM", "Incident Response", "Network Security", "Threat Modeling",
        "Cryptography"}},
      {"skills", CompareOp::contains_any, "have computer-aided design skills",
       {"AutoCAD", "SolidWorks", "Revit", "CATIA"}},
      {"skills", CompareOp::contains_any, "have teaching skills",
       {"Curriculum Design", "Lesson Planning", "Classroom Management", "Tutoring"}},
      {"skills", CompareOp::contains_any, "have legal skills",
       {"Legal Research", "Contract Drafting", "Litigation", "Compliance", "Due Diligence"}},
      {"skills", CompareOp::contains_any, "have logistics skills",
       {"Logistics", "Inventory Management", "Procurement", "Demand Planning",
        "Vendor Management"}},
      {"domain", CompareOp::in, "work in an engineering field",
       {"Software Engineering", "Mechanical Engineering", "Civil Engineering",
        "Electrical Engineering"}},
      {"domain", CompareOp::in, "work in a medical field", {"Healthcare", "Nursing"}},
      {"domain", CompareOp::in, "work in a business field",
       {"Finance", "Accounting", "Marketing", "Sales", "Consulting"}},
      {"domain", CompareOp::in, "work in a technology field",
       {"Software Engineering", "Data Science", "Cybersecurity"}},
      {"domain", CompareOp::in, "work in an operational field",
       {"Operations", "Supply Chain", "Project Management", "Customer Service"}},
      {"domain", CompareOp::in, "work in a creative field", {"Design", "Journalism", "Marketing"}},
      {"education", CompareOp::in, "hold a graduate degree", {"Master", "PhD"}},
      {"education", CompareOp::in, "hold at least a bachelor's degree",
       {"Bachelor", "Master", "PhD"}},
      {"location", CompareOp::in, "are based on the West Coast",
       {"Seattle", "San Francisco", "Los Angeles", "Portland", "San Diego"}},
      {"location", CompareOp::in, "are based on the East Coast",
       {"New York", "Boston", "Miami", "Philadelphia", "Baltimore"}},
      {"location", CompareOp::in, "are based in the Midwest", {"Chicago", "Minneapolis", "Detroit"}},
      {"location", CompareOp::in, "are based in Texas", {"Austin", "Dallas", "Houston"}},
  };
  return groups;
}

StringList to_list(const Words& words) { return StringList(words.begin(), words.end()); }

const ValueGroup* find_group(const Predicate& p) {
  const auto* list = std::get_if<StringList>(&p.operand());
  if (!list) return nullptr;
  for (const auto& g : value_groups()) {
    if (g.attribute == p.attribute() && g.op == p.op() && to_list(g.members) == *list) return &g;
  }
  return nullptr;
}

std::string with_article(std::string_view word) {
  const bool vowel = !word.empty() && std::string_view("AEIOUaeiou").find(word[0]) != std::string::npos;
  return std::string(vowel ? "an " : "a ") + std::string(word);
}

std::string comparison_words(CompareOp op) {
  switch (op) {
    case CompareOp::ge: return "at least";
    case CompareOp::le: return "at most";
    case CompareOp::gt: return "more than";
    case CompareOp::lt: return "fewer than";
    case CompareOp::eq: return "exactly";
    default: return "";
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool chance(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// ---------------------------------------------------------------------------
// Set-op tree helpers

std::string render_node(const SetOpNode& node, const std::vector<TrajectoryStep>& steps,
                        bool nested) {
  if (node.is_leaf()) return steps.at(*node.step).query_text;
  std::vector<std::string> parts;
  for (const auto& c : node.children) parts.push_back(render_node(c, steps, true));
  std::string out;
  if (node.op == SetOp::intersect) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) out += i + 1 == parts.size() ? " and " : ", ";
      out += parts[i];
    }
  } else {
    out = "either ";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) out += i + 1 == parts.size() ? " or " : ", ";
      out += parts[i];
    }
  }
  return nested ? "(" + out + ")" : out;
}

void collect_steps(const SetOpNode& node, std::vector<std::size_t>& out) {
  if (node.is_leaf()) {
    out.push_back(*node.step);
    return;
  }
  if (node.children.size() < 2) throw InputError("set operation with fewer than two operands");
  for (const auto& c : node.children) collect_steps(c, out);
}

json node_to_json(const SetOpNode& node) {
  if (node.is_leaf()) return json{{"step", *node.step}};
  json children = json::array();
  for (const auto& c : node.children) children.push_back(node_to_json(c));
  return json{{"op", to_string(node.op)}, {"children", children}};
}

SetOpNode node_from_json(const json& j) {
  SetOpNode n;
  if (j.contains("step")) {
    n.step = j.at("step").get<std::size_t>();
    return n;
  }
  n.op = parse_set_op(j.at("op").get<std::string>());
  for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
  return n;
}

DocIdSet eval_node(const SetOpNode& node, const std::vector<DocIdSet>& step_sets) {
  if (node.is_leaf()) return step_sets.at(*node.step);
  std::vector<DocIdSet> parts;
  for (const auto& c : node.children) parts.push_back(eval_node(c, step_sets));
  return set_combine(parts, node.op);
}

SetOpNode merge(SetOpNode a, SetOpNode b, SetOp op) {
  SetOpNode out;
  out.op = op;
  for (auto* n : {&a, &b}) {
    if (!n->is_leaf() && n->op == op) {
      for (auto& c : n->children) out.children.push_back(std::move(c));
    } else {
      out.children.push_back(std::move(*n));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bitsets over corpus positions

struct Bits {
  std::vector<std::uint64_t> words;

  explicit Bits(std::size_t n = 0) : words((n + 63) / 64, 0) {}
  void set(std::size_t i) { words[i / 64] |= std::uint64_t{1} << (i % 64); }
  [[nodiscard]] std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
};

Bits combine(const std::vector<Bits>& parts, SetOp op) {
  Bits out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    for (std::size_t i = 0; i < out.words.size(); ++i) {
      out.words[i] = op == SetOp::intersect ? (out.words[i] & parts[p].words[i])
                                            : (out.words[i] | parts[p].words[i]);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Corpus

std::span<const std::string_view> domain_catalog() { return kDomains; }

Corpus generate_corpus(std::uint64_t seed, std::size_t n_docs, std::size_t n_domains) {
  if (n_domains == 0) throw InputError("n_domains must be positive");
  std::mt19937_64 rng(derive_seed(seed, 0xc0, 0));

  std::vector<std::string> domains;
  for (std::size_t i = 0; i < n_domains; ++i) {
    domains.push_back(i < kDomains.size() ? std::string(kDomains[i])
                                          : "Domain " + std::to_string(i + 1));
  }
  std::vector<std::size_t> assignment(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) assignment[i] = i % n_domains;
  std::shuffle(assignment.begin(), assignment.end(), rng);

  std::vector<std::string> names;
  for (auto f : kFirstNames) {
    for (auto l : kLastNames) names.push_back(std::string(f) + " " + std::string(l));
  }
  for (char initial = 'A'; names.size() < n_docs && initial <= 'Z'; ++initial) {
    for (auto f : kFirstNames) {
      for (auto l : kLastNames) {
        names.push_back(std::string(f) + " " + initial + ". " + std::string(l));
      }
    }
  }
  for (std::size_t i = 0; names.size() < n_docs; ++i) {
    names.push_back("Candidate " + std::to_string(i + 1));
  }
  std::shuffle(names.begin(), names.end(), rng);

  const int id_width = std::max<int>(5, static_cast<int>(std::to_string(n_docs).size()));
  Corpus corpus;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const std::string& domain = domains[assignment[i]];
    const std::string& name = names[i];
    const std::string city(pick(rng, kCities));
    const std::string education(pick(rng, kEducation));
    const int years = std::uniform_int_distribution<int>(0, 40)(rng);
    const int projects =
        std::clamp(years * 3 / 2 + std::uniform_int_distribution<int>(-5, 10)(rng), 0, 60);

    const auto pool_it = domain_skills().find(domain);
    const Words& pool = pool_it != domain_skills().end() ? pool_it->second : kGenericSkills;
    const std::size_t n_skills = std::uniform_int_distribution<std::size_t>(3, 8)(rng);
    StringList skills;
    for (std::size_t guard = 0; skills.size() < n_skills && guard < 64; ++guard) {
      const std::string s(chance(rng, 0.75) ? pick(rng, pool) : pick(rng, kGenericSkills));
      if (std::find(skills.begin(), skills.end(), s) == skills.end()) skills.push_back(s);
    }

    std::string id = std::to_string(i + 1);
    id = "d" + std::string(static_cast<std::size_t>(id_width) - id.size(), '0') + id;

    std::string skill_text;
    for (const auto& s : skills) skill_text += (skill_text.empty() ? "" : ", ") + s;
    std::string text = name + "\nDomain: " + domain + "\nLocation: " + city +
                       "\nEducation: " + education + " degree\n\nSummary: " + name + " is " +
                       with_article(domain) + " professional based in " + city + " with " +
                       std::to_string(years) + " years of professional experience and " +
                       std::to_string(projects) + " completed projects.\nSkills: " + skill_text +
                       "\n";

    Document doc;
    doc.id = std::move(id);
    doc.domain = domain;
    doc.text = std::move(text);
    doc.attributes.emplace("name", name);
    doc.attributes.emplace("location", city);
    doc.attributes.emplace("education", education);
    doc.attributes.emplace("years_experience", static_cast<double>(years));
    doc.attributes.emplace("projects_completed", static_cast<double>(projects));
    doc.attributes.emplace("skills", std::move(skills));
    corpus.add(std::move(doc));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Trajectory basics

std::string_view to_string(StepKind kind) {
  return kind == StepKind::keyword_retrieval ? "keyword" : "semantic";
}

namespace {
StepKind parse_step_kind(std::string_view s) {
  if (s == "keyword" || s == "keyword_retrieval") return StepKind::keyword_retrieval;
  if (s == "semantic" || s == "semantic_retrieval") return StepKind::semantic_retrieval;
  throw InputError("unknown step kind '" + std::string(s) + "'");
}
}  // namespace

void validate_trajectory(const Trajectory& t) {
  if (t.steps.size() < 2 || t.steps.size() > 5) {
    throw InputError("trajectory must have 2-5 steps, got " + std::to_string(t.steps.size()));
  }
  std::vector<std::size_t> refs;
  collect_steps(t.set_ops, refs);
  std::sort(refs.begin(), refs.end());
  std::vector<std::size_t> expected(t.steps.size());
  std::iota(expected.begin(), expected.end(), 0);
  if (refs != expected) throw InputError("set operations must reference every step exactly once");
}

std::string describe_predicate(const Predicate& p) {
  if (const auto* g = find_group(p)) return std::string(g->phrase);
  const auto& attr = p.attribute();
  const auto* s = std::get_if<std::string>(&p.operand());
  const auto* num = std::get_if<double>(&p.operand());
  if (attr == "domain" && p.op() == CompareOp::eq && s) return "work in the " + *s + " domain";
  if (attr == "location" && p.op() == CompareOp::eq && s) return "are based in " + *s;
  if (attr == "education" && p.op() == CompareOp::eq && s) {
    return "hold " + with_article(*s) + " degree";
  }
  if (attr == "skills" && p.op() == CompareOp::contains && s) {
    return "list " + *s + " among their skills";
  }
  if (num && !comparison_words(p.op()).empty()) {
    const std::string n = format_number(*num);
    if (attr == "years_experience") {
      return "have " + comparison_words(p.op()) + " " + n + " years of experience";
    }
    if (attr == "projects_completed") {
      return "have completed " + comparison_words(p.op()) + " " + n + " projects";
    }
  }
  return "match " + to_string(p);
}

BucketRange bucket_range(DocCountBucket b) {
  switch (b) {
    case DocCountBucket::two_to_five: return {2, 5};
    case DocCountBucket::five_to_ten: return {6, 10};
    case DocCountBucket::ten_to_twenty: return {11, 20};
    case DocCountBucket::over_twenty: return {21, kMaxGoldDocs};
  }
  return {0, 0};
}

std::optional<DocCountBucket> bucket_of(std::size_t n) {
  for (auto b : kAllBuckets) {
    const auto r = bucket_range(b);
    if (n >= r.lo && n <= r.hi) return b;
  }
  return std::nullopt;
}

std::string_view to_string(DocCountBucket b) {
  switch (b) {
    case DocCountBucket::two_to_five: return "2-5";
    case DocCountBucket::five_to_ten: return "5-10";
    case DocCountBucket::ten_to_twenty: return "10-20";
    case DocCountBucket::over_twenty: return "20+";
  }
  return "?";
}

DocCountBucket parse_bucket(std::string_view text) {
  for (auto b : kAllBuckets) {
    if (to_string(b) == text) return b;
  }
  throw InputError("unknown bucket '" + std::string(text) + "'");
}

ExecutionResult execute_trajectory(const Trajectory& t, const Corpus& corpus) {
  validate_trajectory(t);
  std::vector<DocIdSet> step_sets;
  step_sets.reserve(t.steps.size());
  for (const auto& s : t.steps) step_sets.push_back(scan(corpus, s.predicate));
  ExecutionResult out;
  out.gold_doc_ids = eval_node(t.set_ops, step_sets);
  if (out.gold_doc_ids.empty()) throw DegenerateTrajectoryError("trajectory selects no documents");

  std::vector<const Document*> docs;
  for (const auto& id : out.gold_doc_ids) docs.push_back(corpus.find(id));
  const auto records = t.task.task == TaskType::count
                           ? entity_records(docs)
                           : structured_records(docs, t.task.attribute);
  out.result = apply_task(t.task, records);
  out.gold_answer = out.result.answer_text;
  return out;
}

std::string render_conditions(const Trajectory& t) {
  return render_node(t.set_ops, t.steps, false);
}

std::string render_question(const Trajectory& t) {
  return render_template(t.template_id, render_conditions(t), t.task);
}

json to_json(const Trajectory& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back(json{{"kind", to_string(s.kind)},
                         {"predicate", to_json(s.predicate)},
                         {"query_text", s.query_text}});
  }
  json task{{"type", to_string(t.task.task)}};
  if (t.task.task != TaskType::count) {
    task["attribute"] = t.task.attribute;
    task["direction"] = to_string(t.task.direction);
  }
  if (t.task.task == TaskType::topk) task["k"] = t.task.k;
  return json{{"steps", steps},
              {"set_ops", node_to_json(t.set_ops)},
              {"task", task},
              {"template_id", t.template_id}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  for (const auto& s : j.at("steps")) {
    TrajectoryStep step;
    step.kind = parse_step_kind(s.at("kind").get<std::string>());
    step.predicate = predicate_from_json(s.at("predicate"));
    step.query_text = s.contains("query_text") ? s.at("query_text").get<std::string>()
                                               : describe_predicate(step.predicate);
    t.steps.push_back(std::move(step));
  }
  t.set_ops = node_from_json(j.at("set_ops"));
  const auto& task = j.at("task");
  t.task.task = parse_task_type(task.at("type").get<std::string>());
  if (task.contains("attribute")) t.task.attribute = task.at("attribute").get<std::string>();
  if (task.contains("direction")) {
    t.task.direction = parse_direction(task.at("direction").get<std::string>());
  }
  if (task.contains("k")) t.task.k = task.at("k").get<std::size_t>();
  t.template_id = j.value("template_id", std::size_t{0});
  return t;
}

// ---------------------------------------------------------------------------
// Sampler

struct TrajectorySampler::Impl {
  const Corpus& corpus;
  SamplerConfig config;
  std::map<Predicate, Bits> cache;

  // Candidate operand values, all present in the corpus.
  std::vector<std::string> domains, cities, educations, skills;
  std::vector<double> years, projects;
  std::vector<const ValueGroup*> domain_groups, other_groups;

  Impl(const Corpus& c, SamplerConfig cfg) : corpus(c), config(cfg) {
    std::set<std::string> d, ci, e, sk;
    std::set<double> y, pr;
    for (const auto& doc : corpus) {
      d.insert(doc.domain);
      if (auto* v = doc.attribute("location"); v && std::holds_alternative<std::string>(*v)) {
        ci.insert(std::get<std::string>(*v));
      }
      if (auto* v = doc.attribute("education"); v && std::holds_alternative<std::string>(*v)) {
        e.insert(std::get<std::string>(*v));
      }
      if (auto* v = doc.attribute("skills"); v && std::holds_alternative<StringList>(*v)) {
        for (const auto& s : std::get<StringList>(*v)) sk.insert(s);
      }
      if (auto* v = doc.attribute("years_experience"); v && std::holds_alternative<double>(*v)) {
        y.insert(std::get<double>(*v));
      }
      if (auto* v = doc.attribute("projects_completed"); v && std::holds_alternative<double>(*v)) {
        pr.insert(std::get<double>(*v));
      }
    }
    domains.assign(d.begin(), d.end());
    cities.assign(ci.begin(), ci.end());
    educations.assign(e.begin(), e.end());
    skills.assign(sk.begin(), sk.end());
    years.assign(y.begin(), y.end());
    projects.assign(pr.begin(), pr.end());
    for (const auto& g : value_groups()) {
      if (bits(group_predicate(g)).count() == 0) continue;
      (g.attribute == "domain" ? domain_groups : other_groups).push_back(&g);
    }
    if (domains.empty()) throw SamplingError("corpus has no documents to sample from");
  }

  static Predicate group_predicate(const ValueGroup& g) {
    return Predicate(std::string(g.attribute), g.op, to_list(g.members));
  }

  const Bits& bits(const Predicate& p) {
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    Bits b(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (p.matches(corpus[i])) b.set(i);
    }
    return cache.emplace(p, std::move(b)).first->second;
  }

  TrajectoryStep make_step(StepKind kind, Predicate p) {
    TrajectoryStep s;
    s.kind = kind;
    s.query_text = describe_predicate(p);
    s.predicate = std::move(p);
    return s;
  }

  TrajectoryStep anchor_step(std::mt19937_64& rng) {
    if (!domain_groups.empty() && chance(rng, config.semantic_share)) {
      return make_step(StepKind::semantic_retrieval, group_predicate(*pick(rng, domain_groups)));
    }
    return make_step(StepKind::keyword_retrieval,
                     Predicate("domain", CompareOp::eq, pick(rng, domains)));
  }

  TrajectoryStep follow_step(std::mt19937_64& rng) {
    if (!other_groups.empty() && chance(rng, config.semantic_share)) {
      const bool domain = !domain_groups.empty() && chance(rng, 0.2);
      const ValueGroup* g = domain ? pick(rng, domain_groups) : pick(rng, other_groups);
      return make_step(StepKind::semantic_retrieval, group_predicate(*g));
    }
    const auto kind = std::uniform_int_distribution<int>(0, 5)(rng);
    const CompareOp dir = chance(rng, 0.5) ? CompareOp::ge : CompareOp::le;
    switch (kind) {
      case 0:
        if (!years.empty()) {
          return make_step(StepKind::keyword_retrieval,
                           Predicate("years_experience", dir, pick(rng, years)));
        }
        break;
      case 1:
        if (!projects.empty()) {
          return make_step(StepKind::keyword_retrieval,
                           Predicate("projects_completed", dir, pick(rng, projects)));
        }
        break;
      case 2:
        if (!skills.empty()) {
          return make_step(StepKind::keyword_retrieval,
                           Predicate("skills", CompareOp::contains, pick(rng, skills)));
        }
        break;
      case 3:
        if (!educations.empty()) {
          return make_step(StepKind::keyword_retrieval,
                           Predicate("education", CompareOp::eq, pick(rng, educations)));
        }
        break;
      case 4:
        if (!cities.empty()) {
          return make_step(StepKind::keyword_retrieval,
                           Predicate("location", CompareOp::eq, pick(rng, cities)));
        }
        break;
      default: break;
    }
    return make_step(StepKind::keyword_retrieval,
                     Predicate("domain", CompareOp::eq, pick(rng, domains)));
  }

  Bits eval(const SetOpNode& node, const std::vector<TrajectoryStep>& steps) {
    if (node.is_leaf()) return bits(steps[*node.step].predicate);
    std::vector<Bits> parts;
    for (const auto& c : node.children) parts.push_back(eval(c, steps));
    return combine(parts, node.op);
  }

  TaskPlan draw_plan(std::mt19937_64& rng, TaskType task) {
    TaskPlan plan;
    plan.task = task;
    if (task == TaskType::count) return plan;
    plan.attribute = std::string(
        kNumericAttributes[std::uniform_int_distribution<std::size_t>(0, kNumericAttributes.size() - 1)(rng)]
            .name);
    plan.direction = chance(rng, 0.5) ? Direction::desc : Direction::asc;
    if (task == TaskType::topk) {
      static const std::vector<std::size_t> ks{3, 5, 10};
      plan.k = pick(rng, ks);
    }
    return plan;
  }

  std::optional<Trajectory> attempt(std::mt19937_64& rng, DocCountBucket target, TaskType task) {
    const auto n_steps = std::uniform_int_distribution<std::size_t>(
        std::max<std::size_t>(2, config.min_steps), std::min<std::size_t>(5, config.max_steps))(rng);
    Trajectory t;
    t.steps.push_back(anchor_step(rng));
    for (std::size_t guard = 0; t.steps.size() < n_steps && guard < 32; ++guard) {
      auto s = follow_step(rng);
      const bool dup = std::any_of(t.steps.begin(), t.steps.end(),
                                   [&](const auto& o) { return o.predicate == s.predicate; });
      if (!dup) t.steps.push_back(std::move(s));
    }
    if (t.steps.size() < 2) return std::nullopt;

    std::vector<SetOpNode> nodes;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      SetOpNode leaf;
      leaf.step = i;
      nodes.push_back(std::move(leaf));
    }
    while (nodes.size() > 1) {
      auto i = std::uniform_int_distribution<std::size_t>(0, nodes.size() - 2)(rng);
      const SetOp op = chance(rng, config.intersect_share) ? SetOp::intersect : SetOp::unite;
      SetOpNode merged = merge(std::move(nodes[i]), std::move(nodes[i + 1]), op);
      nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      nodes[i] = std::move(merged);
    }
    t.set_ops = std::move(nodes.front());

    const auto size = eval(t.set_ops, t.steps).count();
    const auto range = bucket_range(target);
    if (size < range.lo || size > range.hi) return std::nullopt;

    t.task = draw_plan(rng, task);
    const auto ids = templates_for(task);
    t.template_id = pick(rng, ids);
    return t;
  }
};

TrajectorySampler::TrajectorySampler(const Corpus& corpus, SamplerConfig config)
    : impl_(std::make_unique<Impl>(corpus, config)) {}

TrajectorySampler::~TrajectorySampler() = default;

Trajectory TrajectorySampler::sample(std::mt19937_64& rng, DocCountBucket target,
                                     std::optional<TaskType> task) {
  const TaskType chosen =
      task ? *task : kAllTasks[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
  for (std::size_t a = 0; a < impl_->config.max_attempts; ++a) {
    if (auto t = impl_->attempt(rng, target, chosen)) return std::move(*t);
  }
  throw SamplingError("no trajectory in bucket " + std::string(to_string(target)) + " after " +
                      std::to_string(impl_->config.max_attempts) + " attempts");
}

Trajectory sample_trajectory(std::mt19937_64& rng, const Corpus& corpus, DocCountBucket target,
                             std::optional<TaskType> task, const SamplerConfig& config) {
  TrajectorySampler sampler(corpus, config);
  return sampler.sample(rng, target, task);
}

// ---------------------------------------------------------------------------
// Records

json to_json(const QueryRecord& r) {
  json j{{"id", r.id},
         {"question", r.question},
         {"task", to_string(r.task)},
         {"gold_answer", r.gold_answer},
         {"gold_doc_ids", json(std::vector<std::string>(r.gold_doc_ids.begin(), r.gold_doc_ids.end()))}};
  if (r.bucket) j["bucket"] = to_string(*r.bucket);
  if (r.trajectory) j["trajectory"] = to_json(*r.trajectory);
  return j;
}

namespace {
const json* field(const json& j, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (auto it = j.find(n); it != j.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}
}  // namespace

QueryRecord record_from_json(const json& j, std::size_t line) {
  try {
    QueryRecord r;
    const json* id = field(j, {"id", "query_id", "qid"});
    const json* q = field(j, {"question", "query"});
    const json* task = field(j, {"task", "type", "task_type"});
    const json* answer = field(j, {"gold_answer", "answer"});
    const json* ids = field(j, {"gold_doc_ids", "doc_ids", "gold_docs"});
    if (!id || !q || !task || !answer || !ids) {
      throw ParseError(line, "record needs id, question, task, answer and gold doc ids");
    }
    r.id = id->is_string() ? id->get<std::string>() : id->dump();
    r.question = q->get<std::string>();
    r.task = parse_task_type(task->get<std::string>());
    r.gold_answer = answer->is_string() ? answer->get<std::string>() : answer->dump();
    for (const auto& d : *ids) r.gold_doc_ids.insert(d.get<std::string>());
    if (const json* b = field(j, {"bucket", "doc_count_bucket"})) {
      r.bucket = parse_bucket(b->get<std::string>());
    }
    if (const json* t = field(j, {"trajectory"})) r.trajectory = trajectory_from_json(*t);
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(line, std::string("bad dataset record: ") + e.what());
  }
}

std::string dataset_to_jsonl(std::span<const QueryRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<QueryRecord> parse_dataset_jsonl(std::istream& in) {
  std::vector<QueryRecord> out;
  jsonl::for_each_line(in, [&](std::size_t line, const json& j) {
    out.push_back(record_from_json(j, line));
  });
  return out;
}

std::vector<QueryRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset " + path.string());
  return parse_dataset_jsonl(in);
}

std::vector<std::size_t> allocate_quota(std::span<const double> shares, std::size_t total) {
  double sum = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("mix shares must be non-negative");
    sum += s;
  }
  if (shares.empty() || sum <= 0.0) throw InputError("mix shares must sum to a positive value");
  std::vector<std::size_t> out(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] / sum * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total; ++i, ++used) ++out[remainders[i % remainders.size()].second];
  return out;
}

std::vector<QueryRecord> generate_dataset(const Corpus& corpus, const DatasetConfig& config,
                                          GenerationReport* report) {
  const auto task_quota = allocate_quota(config.task_mix, config.count);
  const auto bucket_quota = allocate_quota(config.bucket_mix, config.count);
  std::vector<TaskType> tasks;
  std::vector<DocCountBucket> buckets;
  for (std::size_t i = 0; i < 4; ++i) {
    tasks.insert(tasks.end(), task_quota[i], kAllTasks[i]);
    buckets.insert(buckets.end(), bucket_quota[i], kAllBuckets[i]);
  }
  std::mt19937_64 slot_rng(derive_seed(config.seed, 0x51, 0));
  std::shuffle(tasks.begin(), tasks.end(), slot_rng);
  std::shuffle(buckets.begin(), buckets.end(), slot_rng);

  GenerationReport local;
  GenerationReport& rep = report ? *report : local;
  rep = GenerationReport{};
  rep.requested = config.count;

  TrajectorySampler sampler(corpus, config.sampler);
  std::set<std::string> seen;
  std::vector<QueryRecord> out;
  for (std::size_t slot = 0; slot < config.count; ++slot) {
    bool filled = false;
    for (std::size_t r = 0; r < config.slot_retries && !filled; ++r) {
      std::mt19937_64 rng(derive_seed(config.seed, slot + 1, r));
      Trajectory t;
      try {
        t = sampler.sample(rng, buckets[slot], tasks[slot]);
      } catch (const SamplingError&) {
        continue;
      }
      std::string question = render_question(t);
      if (seen.contains(question)) continue;
      const auto exec = execute_trajectory(t, corpus);
      QueryRecord rec;
      std::string id = std::to_string(out.size());
      rec.id = "q" + std::string(id.size() < 5 ? 5 - id.size() : 0, '0') + id;
      rec.question = std::move(question);
      rec.task = t.task.task;
      rec.gold_answer = exec.gold_answer;
      rec.gold_doc_ids = exec.gold_doc_ids;
      rec.bucket = bucket_of(exec.gold_doc_ids.size());
      rec.trajectory = std::move(t);
      seen.insert(rec.question);
      out.push_back(std::move(rec));
      filled = true;
    }
    if (!filled) ++rep.failed_slots[std::string(to_string(buckets[slot]))];
  }
  rep.generated = out.size();
  return out;
}

std::vector<QueryRecord> validate_records(std::span<const QueryRecord> records,
                                          const Corpus& corpus, ValidationReport& report) {
  std::vector<QueryRecord> kept;
  std::set<std::string> seen;
  for (const auto& r : records) {
    const auto n = r.gold_doc_ids.size();
    std::string reason;
    if (n > kMaxGoldDocs) {
      reason = "doc_count_exceeded";
    } else if (n < kMinGoldDocs) {
      reason = "doc_count_too_small";
    } else if (seen.contains(r.question)) {
      reason = "duplicate_question";
    } else if (r.bucket && bucket_of(n) != r.bucket) {
      reason = "consistency";
    } else if (r.trajectory) {
      try {
        const auto exec = execute_trajectory(*r.trajectory, corpus);
        if (exec.gold_doc_ids != r.gold_doc_ids || exec.gold_answer != r.gold_answer ||
            r.trajectory->task.task != r.task || render_question(*r.trajectory) != r.question) {
          reason = "consistency";
        }
      } catch (const Error&) {
        reason = "consistency";
      }
    }
    if (!reason.empty()) {
      ++report.rejections[reason];
      continue;
    }
    seen.insert(r.question);
    kept.push_back(r);
  }
  report.saved = kept.size();
  return kept;
}

ValidationReport validate_and_save(std::span<const QueryRecord> records, const Corpus& corpus,
                                   const std::filesystem::path& path) {
  ValidationReport report;
  const auto kept = validate_records(records, corpus, report);
  jsonl::atomic_write(path, dataset_to_jsonl(kept));
  return report;
}

json to_json(const ValidationReport& report) {
  json rejections = json::object();
  for (const auto& [k, v] : report.rejections) rejections[k] = v;
  return json{{"saved", report.saved}, {"rejections", rejections}};
}

}  // namespace globalrag
