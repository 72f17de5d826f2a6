#include "scaffoldsim/scripted_backend.hpp"

#include <json.hpp>

#include "scaffoldsim/error.hpp"
#include "scaffoldsim/rng.hpp"
#include "scaffoldsim/text.hpp"

namespace scaffoldsim {

namespace {

using Hints = std::map<std::string, std::string>;

std::string hint(const Hints& h, const std::string& key, std::string fallback = {}) {
    auto it = h.find(key);
    return it == h.end() || it->second.empty() ? fallback : it->second;
}

std::vector<std::string> hint_list(const Hints& h, const std::string& key) {
    std::vector<std::string> out;
    for (auto& part : text::split(hint(h, key), '|'))
        if (!text::trim(part).empty()) out.push_back(text::trim(part));
    return out;
}

template <class T>
const T& pick(SplitMix64& rng, const std::vector<T>& items) {
    return items[rng.below(items.size())];
}

std::string pick_or(SplitMix64& rng, const std::vector<std::string>& items, std::string fallback) {
    return items.empty() ? fallback : pick(rng, items);
}

std::string lower_first(std::string s) {
    if (s.size() > 1 && s[0] == 'I' && (s[1] == ' ' || s[1] == '\'')) return s;
    if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z') s[0] = static_cast<char>(s[0] - 'A' + 'a');
    return s;
}

std::string quoted_word(const std::string& s) {
    const auto open = s.find('"');
    if (open == std::string::npos) return {};
    const auto close = s.find('"', open + 1);
    if (close == std::string::npos) return {};
    return s.substr(open + 1, close - open - 1);
}

std::string list_names(const std::vector<std::string>& names) {
    if (names.empty()) return {};
    if (names.size() == 1) return names[0];
    std::vector<std::string> head(names.begin(), names.end() - 1);
    return text::join(head, ", ") + " and " + names.back();
}

// Neutral topics that stay clear of any criterion keyword, used when a turn does not
// surface the current focus.
const std::vector<std::string> kGlosses = {
    "the poet's mood",     "the opening image",  "the tone of the last line",
    "the choice of words", "the poem's structure", "the sound of the lines",
};

const std::vector<std::string> kOffTask = {
    "Sorry, I lost my place for a moment and need a second to catch up.",
    "Honestly, I am still getting used to how our group takes turns.",
};

enum class Move { B1, B2, C1, D1, D2, D3, D4, D5 };

Move choose_move(SplitMix64& rng, const std::string& role, const std::string& action,
                 const std::string& peer_action, bool deep) {
    if (action == "question") return Move::D3;
    if (action == "raise_issue") return Move::D4;
    if (action == "summarize") {
        if (role == "Leader") return rng.chance(0.6) ? Move::B2 : Move::C1;
        if (role == "Summarizer") return rng.chance(0.8) ? Move::C1 : Move::B2;
        return rng.chance(0.5) ? Move::C1 : Move::B2;
    }
    // present_viewpoint
    if (!deep && rng.chance(0.5)) return rng.chance(0.7) ? Move::D1 : Move::D2;
    if (role == "Leader") return rng.chance(0.7) ? Move::B1 : Move::D1;
    if (role == "Supporter") return rng.chance(0.75) ? Move::D2 : Move::D1;
    if (role == "Expounder")
        return peer_action == "question" || peer_action == "raise_issue" ? Move::D5 : Move::D1;
    return Move::D1;
}

std::string student_line(SplitMix64& rng, Move move, const std::string& topic, const std::string& image,
                         const std::string& peer, const std::vector<std::string>& covered) {
    const std::string cov = covered.empty() ? "the first lines" : lower_first(pick(rng, covered));
    const std::string who = peer.empty() ? "the teacher" : peer;
    switch (move) {
        case Move::B1:
            return pick(rng, std::vector<std::string>{
                "Let's start the discussion with " + topic + ". What are everyone's thoughts on how \"" + image +
                    "\" connects to it?",
                "Let's start the discussion by looking at " + topic + ". What are everyone's thoughts about the word \"" +
                    image + "\" here?"});
        case Move::B2:
            return "We covered " + cov + ", and we can move on to " + topic + ". The word \"" + image +
                   "\" could be our way in.";
        case Move::C1:
            return pick(rng, std::vector<std::string>{
                "To sum up, we have discussed " + cov + " and now " + topic + ". The word \"" + image +
                    "\" ties these readings together.",
                "To sum up what we have so far: " + cov + " is settled, and " + topic + " is taking shape around \"" +
                    image + "\"."});
        case Move::D1:
            return pick(rng, std::vector<std::string>{
                "I think " + topic + " matters here, because the word \"" + image + "\" carries it.",
                "I think the poem points to " + topic + ", because \"" + image + "\" is chosen so deliberately."});
        case Move::D2:
            return "I agree with " + who + ", because " + topic + " is supported by the word \"" + image + "\".";
        case Move::D3:
            return pick(rng, std::vector<std::string>{
                "I have some questions about " + topic + ". Could someone explain how \"" + image + "\" fits with it?",
                "Could someone explain what " + topic + " has to do with \"" + image + "\"? I am not sure I follow."});
        case Move::D4:
            return pick(rng, std::vector<std::string>{
                "I think the reading of " + topic + " so far is one-sided, because \"" + image +
                    "\" points another way.",
                "I disagree with " + who + " about " + topic + ", because the word \"" + image +
                    "\" suggests something else."});
        case Move::D5:
            return "Regarding the issue of " + topic + ", I think the line with \"" + image + "\" answers it.";
    }
    return {};
}

std::string student_speech(SplitMix64& rng, const Hints& h, double contradiction_rate) {
    const bool deep = hint(h, "condition") == "deep_think";
    const int turn_index = std::stoi(hint(h, "turn_index", "0"));
    const auto focus_keywords = hint_list(h, "focus_keywords");
    const auto vocabulary = hint_list(h, "vocabulary");
    const auto covered = hint_list(h, "covered_titles");

    if (rng.chance(deep ? 0.02 : 0.05)) return pick(rng, kOffTask);

    bool surface = false;
    if (!focus_keywords.empty()) {
        if (deep)
            surface = turn_index == 0 || rng.chance(0.35);
        else
            surface = rng.chance(turn_index == 0 ? 0.55 : 0.25);
    }
    const std::string topic = surface ? pick(rng, focus_keywords) : pick(rng, kGlosses);

    std::string image;
    if (deep) image = quoted_word(hint(h, "reflection_contribution"));
    if (image.empty()) image = pick_or(rng, vocabulary, "the imagery");

    const Move move = choose_move(rng, hint(h, "role"), hint(h, "action"), hint(h, "peer_action"), deep);
    std::string out = student_line(rng, move, topic, image, hint(h, "peer"), covered);

    double echo_p = deep ? 0.15 : 0.45;
    if (move == Move::D2 || move == Move::C1) echo_p += 0.2;
    const std::string echo = hint(h, "echo");
    if (!echo.empty() && rng.chance(echo_p)) {
        auto body = text::truncate_to_units(text::first_sentence(echo, 1000), 40, text::LengthUnit::words).text;
        out += " As " + hint(h, "peer", "we heard") + " said, " + lower_first(body) + ".";
    }
    if (contradiction_rate > 0.0 && rng.chance(contradiction_rate))
        out += " On second thought, I no longer believe " + topic + " matters here.";
    return out;
}

nlohmann::ordered_json student_reflection(SplitMix64& rng, const Hints& h) {
    const std::string name = hint(h, "name", "a student");
    const std::string role = hint(h, "role", "student");
    const std::string focus = lower_first(hint(h, "focus_title", "the central image"));
    auto fresh = hint_list(h, "fresh_vocabulary");
    if (fresh.empty()) fresh = hint_list(h, "vocabulary");
    const std::string word = pick_or(rng, fresh, "imagery");
    const std::string peer = hint(h, "peer");

    nlohmann::ordered_json j;
    j["Understanding of the Poem"] = "Based on my role as " + role + ", my understanding of this poem is that it turns on " +
                                     focus + ", and the teacher wants us to reach that point.";
    j["Reaction to Others' Comments"] =
        peer.empty() ? std::string("My thoughts on other students' comments are that nobody has spoken yet, so I will "
                                   "start from the teacher's instruction.")
                     : "My thoughts on other students' comments are that " + peer +
                           pick(rng, std::vector<std::string>{" opened a useful line but left the text underused.",
                                                              " made a fair point that still needs evidence.",
                                                              " moved quickly past the details of the poem."});
    j["Possible Contributions"] = "Considering my role, the unique perspective or insight I can offer is the word \"" +
                                  word + "\" and what it adds to " + focus + ".";
    j["Inner Thoughts"] = "As " + name + ", my true thoughts at this moment are " +
                          pick(rng, std::vector<std::string>{"that I want to add something new rather than repeat others.",
                                                             "that I should stay close to the text and my role.",
                                                             "that the group is close, and one clear example will help."});
    return j;
}

std::string teacher_initiate(const Hints& h) {
    std::vector<std::string> points;
    for (const auto& t : hint_list(h, "criteria_titles")) points.push_back(lower_first(t));
    return "Welcome, everyone. Today's task: " + hint(h, "task_prompt") + " Please aim to reach these key points: " +
           text::join(points, "; ") +
           ". Speak in turn, keep each contribution brief, respond to one another and stay close to the text. "
           "The speaking order for the first round is " +
           list_names(hint_list(h, "order")) + ".";
}

std::string teacher_assess(SplitMix64& rng, const Hints& h) {
    std::string out;
    const auto order = list_names(hint_list(h, "order"));
    if (hint(h, "action") == "comment_and_reorder") {
        std::vector<std::string> covered;
        for (const auto& t : hint_list(h, "covered_titles")) covered.push_back(lower_first(t));
        const auto praised = list_names(hint_list(h, "praised"));
        out = pick(rng, std::vector<std::string>{"Well done", "Excellent work", "Good work"}) +
              (praised.empty() ? std::string() : ", " + praised) + ": you brought out " + list_names(covered) +
              ". Keep building on that insight. Next we will hear from " + order + ".";
    } else {
        const std::string focus = lower_first(hint(h, "focus_title", "the next key point"));
        out = pick(rng, std::vector<std::string>{
                  "Let's focus on " + focus + ". Look closely at the poem and ask what it says about this point.",
                  "We have not reached " + focus + " yet. Please look closely at the wording of the poem."}) +
              " Next we will hear from " + order + ".";
    }
    const auto quiet = hint_list(h, "quiet");
    if (!quiet.empty()) out += " " + list_names(quiet) + ", we would like to hear from you next.";
    return out;
}

std::string feedback_for(SplitMix64& rng, const std::string& role, const std::string& participation) {
    const auto parts = text::split(participation, ':');
    if (!parts.empty() && parts[0] == "0") return "you were quiet today; share your reading earlier next time";
    if (role == "Leader") return pick(rng, std::vector<std::string>{"you set clear directions; leave more room for others",
                                                                    "you kept us on task; try asking more open questions"});
    if (role == "Supporter") return pick(rng, std::vector<std::string>{"you backed ideas with evidence; add more of your own",
                                                                       "your support helped; question a point now and then"});
    if (role == "Expounder") return pick(rng, std::vector<std::string>{"your explanations were clear; cite the lines more",
                                                                       "you answered questions well; keep them concise"});
    if (role == "Rebutter") return pick(rng, std::vector<std::string>{"your challenges sharpened us; offer alternatives too",
                                                                      "your questions were sharp; build on answers as well"});
    return pick(rng, std::vector<std::string>{"your summaries tied things together; add fresh evidence too",
                                              "you tracked our progress well; speak up earlier"});
}

std::string teacher_conclude(SplitMix64& rng, const Hints& h) {
    const auto covered = hint_list(h, "covered_titles");
    const auto students = hint_list(h, "student_names");
    const auto participation = hint_list(h, "participation");
    std::string out = "Let me summarize. ";
    if (covered.empty())
        out += "We did not settle any of the key points today, but we made a start.";
    else if (covered.size() == 1)
        out += "We worked through one key point, " + lower_first(covered.front()) + ".";
    else
        out += "We worked through " + std::to_string(covered.size()) + " key points, from " +
               lower_first(covered.front()) + " to " + lower_first(covered.back()) + ".";
    if (hint(h, "termination") == "round_cap") out += " We ran out of rounds before covering everything.";
    for (std::size_t i = 0; i < students.size(); ++i) {
        const auto parts = text::split(students[i], ':');
        const std::string name = parts.empty() ? students[i] : parts[0];
        const std::string role = parts.size() > 1 ? parts[1] : "";
        out += " " + name + ", " + feedback_for(rng, role, i < participation.size() ? participation[i] : "") + ".";
    }
    out += " Thank you all.";
    return out;
}

nlohmann::ordered_json generic_structured(SplitMix64& rng, const GenerationRequest& req) {
    nlohmann::ordered_json j;
    for (const auto& field : req.expected_schema) {
        const auto choices = hint_list(req.hints, "choices." + field);
        if (!choices.empty())
            j[field] = pick(rng, choices);
        else if (field == "rationale")
            j[field] = "Scripted judgment drawn from the allowed values; no language model was consulted.";
        else
            j[field] = "scripted " + field;
    }
    return j;
}

}  // namespace

ScriptedBackend::ScriptedBackend(const BackendConfig& config)
    : global_seed_(config.global_seed), contradiction_rate_(config.scripted_contradiction_rate) {
    if (contradiction_rate_ < 0.0 || contradiction_rate_ > 1.0)
        fail(ErrorKind::invalid_argument, "scripted_contradiction_rate must lie in [0, 1]");
}

std::uint64_t ScriptedBackend::request_key(const GenerationRequest& r) const {
    auto field = [](std::uint64_t h, std::string_view s) {
        h = fnv1a64(s, h);
        return fnv1a64(std::string_view("\x1f", 1), h);
    };
    std::uint64_t h = field(0xcbf29ce484222325ULL, r.system_prompt);
    for (const auto& m : r.messages) h = field(field(h, m.speaker_tag), m.text);
    h = field(h, std::to_string(r.max_units));
    h = field(h, r.seed ? std::to_string(*r.seed) : "-");
    for (const auto& s : r.expected_schema) h = field(h, s);
    for (const auto& [k, v] : r.hints) h = field(field(h, k), v);
    return hash_combine(global_seed_, h);
}

GenerationResponse ScriptedBackend::do_generate(const GenerationRequest& req) {
    SplitMix64 rng(request_key(req));
    const std::string phase = hint(req.hints, "phase");
    GenerationResponse resp;
    if (!req.expected_schema.empty()) {
        nlohmann::ordered_json j = phase == "student_think" ? student_reflection(rng, req.hints)
                                                            : generic_structured(rng, req);
        for (const auto& field : req.expected_schema)
            if (!j.contains(field)) j[field] = "scripted " + field;
        resp.text = j.dump();
        return resp;
    }
    if (phase == "teacher_initiate")
        resp.text = teacher_initiate(req.hints);
    else if (phase == "teacher_assess")
        resp.text = teacher_assess(rng, req.hints);
    else if (phase == "teacher_conclude")
        resp.text = teacher_conclude(rng, req.hints);
    else if (phase == "student_speak")
        resp.text = student_speech(rng, req.hints, contradiction_rate_);
    else
        resp.text = "Scripted reply " + std::to_string(rng.next() % 100000) + ".";
    return resp;
}

}  // namespace scaffoldsim
