// Copyright 2026 The toolmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "toolmix/agents.h"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace toolmix {

namespace prompts {

const std::string_view kRefinement =
    "Task: Decide the final answer based on the following answers from other "
    "agents.\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Candidate answers from several methods:\n"
    "{joined_answers}\n"
    "\n"
    "Based on the candidates above, analyze the question step by step and try "
    "to list all the careful points. In the end of your response, directly "
    "output the answer to the question with the format <<<answer content>>>.";

const std::string_view kJudge =
    "Task: Carefully assess whether the answers below (enclosed by <<< >>>) "
    "show clear and strong consensus, or if another round of reasoning is "
    "needed to improve alignment.\n"
    "\n"
    "IMPORTANT: If there are any differences in reasoning, phrasing, "
    "emphasis, conclusions, or interpretation of key details, you should "
    "conservatively decide to continue refinement.\n"
    "\n"
    "The current round number is {round_num}. Note: Finalizing before round 3 "
    "is uncommon and discouraged unless answers are fully aligned in both "
    "logic and language.\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Candidate answers from different methods:\n"
    "{joined_answers}\n"
    "\n"
    "Instructions:\n"
    "1. Identify any differences in wording, structure, or logic.\n"
    "2. Be especially cautious about subtle variations in conclusion or "
    "emphasis.\n"
    "3. Err on the side of caution: if there's any ambiguity or divergence, "
    "recommend another round.\n"
    "\n"
    "Output your reasoning first, then conclude clearly with <<<YES>>> if the "
    "answers are highly consistent and finalization is safe, or <<<NO>>> if "
    "further refinement is needed.";

const std::string_view kBase =
    "In the end of your response, directly output the answer to the question "
    "with the format <<<answer content>>>.";

const std::string_view kCot =
    "- Analyze the question step by step and try to list all the careful "
    "points.\n"
    "- Then try to acquire the final answer with step by step analysis.\n"
    "- In the end of your response, directly output the answer to the "
    "question with the format <<<answer content>>>.\n"
    "\n"
    "Do not output the code for execution.";

const std::string_view kCotCode =
    "You are a helpful AI assistant. Solve tasks using your coding skills.\n"
    "\n"
    "In the following cases, suggest python code (in a python coding block) "
    "for the user to execute.\n"
    "- Don't include multiple code blocks in one response, only include one "
    "in the response.\n"
    "- Do not ask users to copy and paste the result. Instead, use the "
    "'print' function for the output when relevant.\n"
    "\n"
    "Think the task step by step if you need to. If a plan is not provided, "
    "explain your plan first. You can first output your thinking steps with "
    "texts and then the final python code.\n"
    "\n"
    "Remember in the final code you still need to output each number or "
    "choice in the final print!\n"
    "\n"
    "Start the python block with ```python";

const std::string_view kSearch =
    "The User asks a question, and you solve it. You first generate the "
    "reasoning and thinking process and then provide the User with the final "
    "answer.\n"
    "\n"
    "If you lack the related knowledge, you can use the Search Tool to search "
    "the web and get the information. You can call a search query with the "
    "format of <search>your search query</search>, e.g., <search>Who is the "
    "current president of US?</search>. The searched results will be "
    "returned between <information> and </information>. Once the search "
    "query is complete, stop the generation. Then, the search platform will "
    "return the searched results.\n"
    "\n"
    "You can also solve the question without searching, just by your textual "
    "reasoning.\n"
    "\n"
    "Once you feel you are ready for the final answer, directly return the "
    "answer with the format <<<answer content>>> at the end of your response. "
    "Otherwise, you can continue your reasoning process and possibly "
    "generate more search queries to solve the problem.";

const std::string_view kCode =
    "The User asks a question, and you solve it. You first generate the "
    "reasoning and thinking process and then provide the User with the final "
    "answer. During the thinking process, **you can generate python code** "
    "for efficient searching, optimization, and computing with the format of "
    "starting the python block with ```python. **A code query must involve "
    "only a single script that uses `print' function for the output.**. Once "
    "the code script is complete, stop the generation. Then, the code "
    "interpreter platform will execute the code and return the execution "
    "output and error. Once you feel you are ready for the final answer, "
    "directly return the answer with the format <<<answer content>>> at the "
    "end of your response. Otherwise, you can continue your reasoning process "
    "and possibly generate more code query to solve the problem.";

const std::string_view kDualTool =
    "The User asks a question, and you solve it. You first generate the "
    "reasoning and thinking process and then provide the User with the final "
    "answer.\n"
    "\n"
    "During the thinking process, you can generate python code for efficient "
    "searching, optimization, and computing with the format of starting the "
    "python block with ```python. **A code query must involve only a single "
    "script that uses `print' function for the output.**.. Once the code "
    "script is complete, stop the generation. Then, the code interpreter "
    "platform will execute the code and return the execution output and "
    "error.\n"
    "\n"
    "If you lack the related knowledge, you can use the Google Search Tool to "
    "search the web and get the information. You can call a search query "
    "with the format of <search>your search query</search>, e.g., "
    "<search>Who is the current president of US?</search>. The searched "
    "results will be returned between <information> and </information>. "
    "Once the search query is complete, stop the generation. Then, the "
    "search platform will return the searched results.\n"
    "\n"
    "If you need to search the web, do not generate code in the same "
    "response. Vice versa. You can also solve the question without code and "
    "searching, just by your textual reasoning.\n"
    "\n"
    "Once you feel you are ready for the final answer, directly return the "
    "answer with the format <<<answer content>>> at the end of your response. "
    "Otherwise, you can continue your reasoning process and possibly "
    "generate more code or search queries to solve the problem.";

const std::string_view kGuided =
    "You are guiding another TaskLLM to solve a task. You will be presented "
    "with a task that can be solved using textual reasoning, coding, and web "
    "searching. Sometimes the TaskLLM may need extra help to solve the task, "
    "such as generating code or searching the web. Then must follow the rules "
    "below for both query and return answer:\n"
    "\n"
    "During the thinking process, you can generate python code for efficient "
    "searching, optimization, and computing with the format of starting the "
    "python block with ```python. A code query must involve only a single "
    "script that uses 'print' function for the output.. Once the code script "
    "is complete, stop the generation. Then, the code interpreter platform "
    "will execute the code and return the execution output and error.\n"
    "\n"
    "If you lack the related knowledge, you can use the Google Search Tool to "
    "search the web and get the information. You can call a search query "
    "with the format of <search>your search query</search>, e.g., "
    "<search>Who is the current president of US?</search>. The searched "
    "results will be returned between <information> and </information>. "
    "Once the search query is complete, stop the generation. Then, the "
    "search platform will return the searched results.\n"
    "\n"
    "If you need to search the web, do not generate code in the same "
    "response. Vice versa. You can also solve the question without code and "
    "searching, just by your textual reasoning.\n"
    "\n"
    "Once you feel you are ready for the final answer, directly return the "
    "answer with the format <<<answer content>>> at the end of your response. "
    "Otherwise, you can continue your reasoning process and possibly "
    "generate more code or search queries to solve the problem.\n"
    "\n"
    "Your goal is to determine which method will be most effective for "
    "solving the task. Then you generate the guidance prompt for the TaskLLM "
    "to follow in the next round. The final returned guidance prompt should "
    "be included between <<< and >>>, such as <<<You need to generate more "
    "complex code to solve...>>>.\n"
    "\n"
    "Now, here is the task:";

}  // namespace prompts

namespace {

using nlohmann::json;

constexpr std::string_view kHintSlot = "{hint}";

std::string ResolveHint(std::string_view tmpl, const std::string& hint) {
  std::string out(tmpl);
  if (hint.empty()) {
    // Drop the slot together with the blank line that introduces it.
    for (std::string_view slot : {"\n\n{hint}", "{hint}"}) {
      std::size_t pos;
      while ((pos = out.find(slot)) != std::string::npos) {
        out.erase(pos, slot.size());
      }
    }
    return out;
  }
  const std::pair<std::string_view, std::string_view> values[] = {
      {"hint", hint}};
  return FillTemplate(out, values);
}

AgentSpec MakeSpec(std::string id, std::string display, std::string_view head,
                   ToolSet tools, SearchVariant variant) {
  AgentSpec spec;
  spec.agent_id = std::move(id);
  spec.display_name = std::move(display);
  spec.head_prompt = std::string(head);
  spec.tools = tools;
  spec.search_variant = variant;
  return spec;
}

std::string WithHintSlot(std::string_view prompt) {
  return std::string(prompt) + "\n\n" + std::string(kHintSlot);
}

const std::set<std::string> kSpecFields = {
    "agent_id",    "display_name",      "head_prompt",  "guide_prompt",
    "hint",        "tools",             "search_variant", "tool_budget",
    "samples_per_round", "temperature", "answer_mode"};

AgentSpec SpecFromJson(const json& j, std::size_t index) {
  const std::string where = "agents[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!kSpecFields.count(key)) {
      throw ConfigError(where + ": unknown field '" + key + "'");
    }
  }
  auto required_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw ConfigError(where + ": missing string field '" + key + "'");
    }
    return j[key].get<std::string>();
  };
  AgentSpec spec;
  try {
    spec.agent_id = required_string("agent_id");
    spec.head_prompt = required_string("head_prompt");
    spec.display_name = j.value("display_name", spec.agent_id);
    spec.guide_prompt = j.value("guide_prompt", std::string());
    spec.hint = j.value("hint", std::string());
    bool code = false;
    bool search = false;
    for (const auto& tool : j.value("tools", json::array())) {
      const std::string name = tool.get<std::string>();
      if (name == "code") {
        code = true;
      } else if (name == "search") {
        search = true;
      } else {
        throw ConfigError(where + ": unknown tool '" + name + "'");
      }
    }
    spec.tools = code && search ? ToolSet::Both()
                 : code         ? ToolSet::CodeOnly()
                 : search       ? ToolSet::SearchOnly()
                                : ToolSet::None();
    spec.search_variant =
        SearchVariantFromString(j.value("search_variant", std::string("none")));
    spec.tool_budget = j.value("tool_budget", kDefaultToolBudget);
    spec.samples_per_round = j.value("samples_per_round", 1);
    spec.temperature = j.value("temperature", kDefaultTemperature);
    const std::string mode = j.value("answer_mode", std::string("span"));
    if (mode == "span") {
      spec.answer_mode = AnswerMode::kSpan;
    } else if (mode == "code") {
      spec.answer_mode = AnswerMode::kCode;
    } else {
      throw ConfigError(where + ": unknown answer_mode '" + mode + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

json SpecToJson(const AgentSpec& spec) {
  json j;
  j["agent_id"] = spec.agent_id;
  j["display_name"] = spec.display_name;
  j["head_prompt"] = spec.head_prompt;
  if (!spec.guide_prompt.empty()) j["guide_prompt"] = spec.guide_prompt;
  if (!spec.hint.empty()) j["hint"] = spec.hint;
  json tools = json::array();
  if (spec.tools.code()) tools.push_back("code");
  if (spec.tools.search()) tools.push_back("search");
  j["tools"] = tools;
  j["search_variant"] = std::string(ToString(spec.search_variant));
  j["tool_budget"] = spec.tool_budget;
  j["samples_per_round"] = spec.samples_per_round;
  j["temperature"] = spec.temperature;
  j["answer_mode"] = spec.answer_mode == AnswerMode::kCode ? "code" : "span";
  return j;
}

}  // namespace

std::string_view ToString(SearchVariant variant) {
  switch (variant) {
    case SearchVariant::kNone:
      return "none";
    case SearchVariant::kGoogle:
      return "gs";
    case SearchVariant::kLlm:
      return "llm";
    case SearchVariant::kCombined:
      return "com";
  }
  return "none";
}

SearchVariant SearchVariantFromString(std::string_view s) {
  if (s == "none") return SearchVariant::kNone;
  if (s == "gs") return SearchVariant::kGoogle;
  if (s == "llm") return SearchVariant::kLlm;
  if (s == "com") return SearchVariant::kCombined;
  throw ConfigError("unknown search variant: " + std::string(s));
}

void ValidateSpec(const AgentSpec& spec) {
  const std::string who = "agent '" + spec.agent_id + "': ";
  if (spec.agent_id.empty()) throw ConfigError("agent with empty agent_id");
  if (spec.head_prompt.empty()) throw ConfigError(who + "empty head_prompt");
  if (spec.tool_budget < 1) throw ConfigError(who + "tool_budget must be >= 1");
  if (spec.samples_per_round < 1) {
    throw ConfigError(who + "samples_per_round must be >= 1");
  }
  if (!(spec.temperature >= 0.0)) {
    throw ConfigError(who + "temperature must be >= 0");
  }
  if (spec.search_variant != SearchVariant::kNone && !spec.tools.search()) {
    throw ConfigError(who + "search variant set without search permission");
  }
  if (spec.tools.search() && spec.search_variant == SearchVariant::kNone) {
    throw ConfigError(who + "search permission without a search variant");
  }
}

std::string RenderHeadPrompt(const AgentSpec& spec) {
  return ResolveHint(spec.head_prompt, spec.hint);
}

std::string RenderGuidePrompt(const AgentSpec& spec) {
  return ResolveHint(spec.guide_prompt, spec.hint);
}

AgentPool::AgentPool(std::vector<AgentSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ConfigError("agent pool is empty");
  std::set<std::string> seen;
  for (const auto& spec : specs_) {
    ValidateSpec(spec);
    if (!seen.insert(spec.agent_id).second) {
      throw ConfigError("duplicate agent_id '" + spec.agent_id + "'");
    }
  }
}

const AgentSpec& AgentPool::Find(std::string_view agent_id) const {
  for (const auto& spec : specs_) {
    if (spec.agent_id == agent_id) return spec;
  }
  throw ConfigError("no agent '" + std::string(agent_id) + "' in pool");
}

AgentPool DefaultPool() {
  using SV = SearchVariant;
  std::vector<AgentSpec> specs;
  specs.push_back(MakeSpec("Base", "w/o TTS", prompts::kBase, ToolSet::None(),
                           SV::kNone));
  specs.push_back(MakeSpec("CoT", "CoT Agent", prompts::kCot, ToolSet::None(),
                           SV::kNone));
  AgentSpec cot_code = MakeSpec("CoT_code", "CoT-Code Agent",
                                prompts::kCotCode, ToolSet::None(), SV::kNone);
  cot_code.answer_mode = AnswerMode::kCode;
  specs.push_back(std::move(cot_code));
  specs.push_back(MakeSpec("S", "Search Agent", prompts::kSearch,
                           ToolSet::SearchOnly(), SV::kLlm));
  specs.push_back(MakeSpec("C", "Code Agent", prompts::kCode,
                           ToolSet::CodeOnly(), SV::kNone));
  specs.push_back(MakeSpec("C+", "Code Agent+", WithHintSlot(prompts::kCode),
                           ToolSet::CodeOnly(), SV::kNone));
  const std::pair<SV, const char*> variants[] = {
      {SV::kGoogle, "gs"}, {SV::kLlm, "llm"}, {SV::kCombined, "com"}};
  for (const auto& [variant, tag] : variants) {
    specs.push_back(MakeSpec(std::string("CS_") + tag,
                             std::string("Dual-Tool Agent (") + tag + ")",
                             prompts::kDualTool, ToolSet::Both(), variant));
  }
  for (const auto& [variant, tag] : variants) {
    AgentSpec spec = MakeSpec(std::string("CSG_") + tag,
                              std::string("Guided Agent (") + tag + ")",
                              prompts::kDualTool, ToolSet::Both(), variant);
    spec.guide_prompt = std::string(prompts::kGuided);
    specs.push_back(std::move(spec));
  }
  for (const auto& [variant, tag] : variants) {
    AgentSpec spec = MakeSpec(std::string("CSG+_") + tag,
                              std::string("Guided Agent+ (") + tag + ")",
                              WithHintSlot(prompts::kDualTool),
                              ToolSet::Both(), variant);
    spec.guide_prompt = WithHintSlot(prompts::kGuided);
    specs.push_back(std::move(spec));
  }
  return AgentPool(std::move(specs));
}

std::string FillTemplate(
    std::string_view tmpl,
    std::span<const std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [name, value] : values) {
        if (tmpl.compare(i + 1, name.size(), name) == 0 &&
            i + 1 + name.size() < tmpl.size() &&
            tmpl[i + 1 + name.size()] == '}') {
          out.append(value);
          i += name.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

std::string JoinAnswers(std::span<const AgentAnswer> answers) {
  std::string out;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "Answer " + std::to_string(i + 1) + ":\n";
    out += answers[i].raw_response;
  }
  return out;
}

std::string BuildRoundPrompt(const AgentSpec& spec, const Question& question,
                             std::span<const AgentAnswer> prior) {
  const std::string head = RenderHeadPrompt(spec);
  if (prior.empty()) return head + "\n\n" + question.body;
  const int round = prior.front().round;
  for (const auto& answer : prior) {
    if (answer.round != round) {
      throw std::invalid_argument(
          "prior answers span multiple rounds (" + std::to_string(round) +
          " and " + std::to_string(answer.round) + ")");
    }
  }
  const std::string joined = JoinAnswers(prior);
  const std::pair<std::string_view, std::string_view> values[] = {
      {"question", question.body}, {"joined_answers", joined}};
  return FillTemplate(prompts::kRefinement, values) + "\n\n" + head;
}

std::string BuildJudgePrompt(const Question& question, int round_num,
                             std::span<const AgentAnswer> answers) {
  const std::string joined = JoinAnswers(answers);
  const std::string round = std::to_string(round_num);
  const std::pair<std::string_view, std::string_view> values[] = {
      {"round_num", round},
      {"question", question.body},
      {"joined_answers", joined}};
  return FillTemplate(prompts::kJudge, values);
}

AgentPool LoadPool(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("pool document is not valid JSON: ") +
                      e.what());
  }
  if (!doc.is_object()) throw ConfigError("pool document must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "schema_version" && key != "agents") {
      throw ConfigError("pool document: unknown field '" + key + "'");
    }
  }
  if (doc.value("schema_version", 0) != 1) {
    throw ConfigError("pool document: schema_version must be 1");
  }
  if (!doc.contains("agents") || !doc["agents"].is_array()) {
    throw ConfigError("pool document: missing 'agents' array");
  }
  std::vector<AgentSpec> specs;
  std::size_t index = 0;
  for (const auto& entry : doc["agents"]) {
    specs.push_back(SpecFromJson(entry, index++));
  }
  return AgentPool(std::move(specs));
}

AgentPool LoadPoolFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pool file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return LoadPool(buffer.str());
}

std::string DumpPool(const AgentPool& pool) {
  json doc;
  doc["schema_version"] = 1;
  doc["agents"] = json::array();
  for (const auto& spec : pool.specs()) doc["agents"].push_back(SpecToJson(spec));
  return doc.dump(2);
}

}  // namespace toolmix
