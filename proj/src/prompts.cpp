#include "revmine/prompts.hpp"

#include <stdexcept>

namespace revmine::prompts {

namespace {

constexpr std::string_view kIssueAgent =
    R"~(You are a consultant hired by a large corporation. You will be given {count} negative {review_noun} from customers.
Your task is to identify the major themes, and list the specific issues the customers faced under that theme.
Do not include explanations or restatements. The issues should be descriptive, concise and clear.

The output must strictly follow the json format.
Here is an example:

My reviews are:
"The house looked great in the photos, but once I moved in the reality was very different. There are cracks in the walls and baseboards, sloppy patchwork that looks like it was rushed, and the sprinkler system doesn't work at all. I was told I'd have to spend thousands to fix it, just a month after moving in. The windows fall off track, rain seeps in because the seals are broken, and even the fridge was missing the water and air filters."

"Honestly the worst service I've ever dealt with. Their employees hang up on you all the time, and when they don't, you're stuck waiting on hold for hours. I've spent so much time on the phone trying to get them to fix an issue they admitted was a mistake, but nothing ever gets resolved. Multiple people promised me a call back and, of course, no one ever did."
{
"a": {
    "theme": "Maintenance",
    "issues": ["Sprinkler system damaged", "Windows falling off track", "Cracks in the wall"]
},
"b": {
    "theme": "Customer Support",
    "issues": ["Employees hang up on you constantly", "You have to wait for hours on the phone", "No call backs from support"]
}
}

Rules:
1) A theme can contain at most 5 issues.
2) The themes and the issues under them should not be repetitive.
3) If there are multiple issues that are similar to each other, merge them into one.
4) An issue can belong to at most one theme.

My reviews are:
{reviews})~";

constexpr std::string_view kRecommendation =
    R"~(You are a consultant tasked with solving issues faced by customers. You will be given an issue, along with the broad theme associated with that issue.
Give 3 to 4 actionable business recommendations suited for the following issue and theme:
{theme}
{issue}
You must only generate the recommendations, and not any other additional text, explanations, benefits.)~";

constexpr std::string_view kRecommendationRevision =
    R"~(

Your previous recommendations were:
{prior}

An evaluator reviewed them and gave this feedback:
{feedback}

Revise the recommendations so that they address the feedback. Give 3 to 4 recommendations as a numbered list and nothing else.)~";

constexpr std::string_view kEvaluation =
    R"~(Evaluate the advice: {advice} for the problem: {issue}. The issue is associated with the following theme: {theme}.
Provide scores from 1 (poor) to 5 (excellent) for Specificity, Relevance, Actionability and Concision.
If the advice is lacking, provide feedback on how to improve it. Here are examples of how to score:
{examples}

Respond with JSON only, in this format:
{"SRAC": [<specificity>, <relevance>, <actionability>, <concision>], "feedback": "<how to improve the advice, or an empty string>"})~";

constexpr std::string_view kEvaluationExamples = R"~([
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Introduce a pre-arrival web check-in system that allows guests to upload their identification, confirm payment details, and choose their room preferences before arriving. This will reduce manual data entry at the front desk and speed up the process, especially during peak hours when lines tend to build up quickly.",
    "SRAC": [5, 5, 5, 4],
    "explanation": "Highly specific, relevant, and actionable advice that directly addresses the issue. Slightly long but precise and feasible for implementation."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Encourage guests to arrive earlier in the day or during less busy times to avoid crowds. You could include this suggestion in their booking confirmation email or on the website so they can plan accordingly. This would help distribute guest arrivals throughout the day and reduce peak congestion.",
    "SRAC": [3, 4, 4, 4],
    "explanation": "Moderately specific and relevant. It provides a practical tip, though it doesn't fundamentally fix the process. Reasonably concise."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Consider redesigning the entire hotel reception area to include a coffee bar, lounge seating, and entertainment screens. Guests could relax while waiting, which may make the wait seem shorter. It might also increase overall satisfaction and generate some additional revenue from the lobby cafe.",
    "SRAC": [3, 2, 2, 3],
    "explanation": "Creative but not very relevant or actionable in solving long wait times directly. Focuses more on perception than process improvement."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Use AI-based forecasting tools to analyze booking data, flight schedules, and local events to predict check-in surges. Adjust staffing levels dynamically based on these forecasts and automate alerts for the management team to ensure resource allocation matches real-time demand.",
    "SRAC": [5, 5, 5, 4],
    "explanation": "Excellent strategic solution. Highly specific, directly relevant, and very actionable with the right tools. Slightly verbose but effective."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Hire more employees to make check-in faster. The more people you have, the better and faster everything will be for guests. This should solve the issue without needing to change any systems or technology.",
    "SRAC": [2, 3, 3, 5],
    "explanation": "Very concise but oversimplified. Not specific about timing, training, or efficiency improvements. Lacks depth and sustainability."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Install digital check-in kiosks at multiple points around the lobby where guests can verify their ID, pay deposits, and receive a digital key. This will streamline standard check-ins, leaving staff free to handle exceptions or special requests more quickly.",
    "SRAC": [5, 5, 4, 4],
    "explanation": "Clear, specific, and relevant. Actionable though requires upfront investment. Balanced in detail and brevity."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Develop a multilingual mobile concierge chatbot to assist with pre-arrival check-in, explain policies, and collect preferences. The chatbot can guide guests through ID verification and notify reception staff before arrival to ensure all details are ready, cutting down on face-to-face processing time.",
    "SRAC": [5, 5, 5, 3],
    "explanation": "Very specific and forward-thinking. Highly actionable with good infrastructure, though slightly long and tech-heavy."
  },
  {
    "issue": "Long wait times at check-in (30-60+ minutes)",
    "advice": "Post motivational signs near the check-in counter reminding guests to stay patient and positive while they wait in line. You could also play calming background music to make the experience more pleasant for everyone.",
    "SRAC": [2, 2, 2, 4],
    "explanation": "Not specific or relevant to solving the root cause. Actionable but superficial, it improves perception, not efficiency."
  }
])~";

constexpr std::string_view kRankingThree =
    R"~(You are a senior consultant hired by a corporation who wishes to improve customer satisfaction. You will be given three recommendations to solve an issue faced by the customer. You must decide which one of the three - first, second or third is the best option. Consider all aspects from the perspective of the corporation such as practicality, cost of implementation and efficacy in solving the issue.)~";

constexpr std::string_view kRankingTwo =
    R"~(You are a senior consultant hired by a corporation who wishes to improve customer satisfaction. You will be given two recommendations to solve an issue faced by the customer. You must decide which one of the two - first or second is the best option. Consider all aspects from the perspective of the corporation such as practicality, cost of implementation and efficacy in solving the issue.)~";

constexpr std::string_view kRankingBody =
    R"~(

Issue: {issue}
Theme: {theme}

{contenders}
Respond with JSON only, in this format:
{"choice": <{choices}>, "reason": "<why this option is the best>"})~";

constexpr std::string_view kJudge =
    R"~(You are an expert evaluator assessing business recommendations.
Rate the following recommendation on all 8 quality dimensions.

CONTEXT:
Business Type: {business_context}
Original Reviews/Issues: {original_context}

RECOMMENDATION TO EVALUATE:
{recommendation}

DIMENSIONS TO RATE (1-5 scale for each):
1. Actionability: Does the recommendation spell out concrete steps that can be started right away, with clear timing and ownership? 1 = vague slogan, 5 = specific, time-bound actions with named owners.
2. Specificity: Does it cite concrete details (where, when, who) that trace back to the customer reviews? 1 = generic cliche, 5 = precise and evidence-backed.
3. Feasibility: Can a typical small or medium business carry it out given cost, staff skills and effort? 1 = unrealistic, 5 = easy to execute with ordinary resources.
4. Expected Impact: How likely is it to move key indicators such as NPS, retention or operational efficiency? 1 = negligible, 5 = material and grounded in the reported issues.
5. Novelty: Does it offer non-obvious, review-informed insight beyond basic hygiene fixes? 1 = commonplace, 5 = fresh and insightful.
6. Non-redundancy: Does it synthesize and prioritize rather than restate the reviews or repeat itself? 1 = repetitive paraphrase, 5 = compact integration of several signals.
7. Bias: Is it free of unfounded assumptions and stereotypes? 1 = clearly biased, 5 = objective and evidence-based.
8. Reading Clarity: Is the text clear, coherent and professionally written? 1 = confusing, 5 = very clear.

Scale: 1 = lowest quality, 2 = below average, 3 = moderate, 4 = good, 5 = excellent.

RESPONSE FORMAT (JSON only):
{
    "actionability": <integer 1-5>,
    "specificity": <integer 1-5>,
    "feasibility": <integer 1-5>,
    "expected_impact": <integer 1-5>,
    "novelty": <integer 1-5>,
    "non_redundancy": <integer 1-5>,
    "bias": <integer 1-5>,
    "reading_clarity": <integer 1-5>
})~";

constexpr std::string_view kVanilla =
    R"~(You are a consultant hired by a large corporation. You will be given {count} negative {review_noun} from customers. Give actionable business recommendations that solve the issues these customers faced.
You must only generate the recommendations as a numbered list, and not any other additional text, explanations, benefits.

My reviews are:
{reviews})~";

}  // namespace

const std::vector<PromptTemplate>& all() {
    static const std::vector<PromptTemplate> registry = {
        {"issue_agent", 1, kIssueAgent},
        {"recommendation", 1, kRecommendation},
        {"recommendation_revision", 1, kRecommendationRevision},
        {"evaluation", 1, kEvaluation},
        {"evaluation_examples", 1, kEvaluationExamples},
        {"ranking_three", 1, kRankingThree},
        {"ranking_two", 1, kRankingTwo},
        {"ranking_body", 1, kRankingBody},
        {"judge", 1, kJudge},
        {"vanilla", 1, kVanilla},
    };
    return registry;
}

const PromptTemplate& get(std::string_view id) {
    for (const auto& t : all())
        if (t.id == id) return t;
    throw std::out_of_range("unknown prompt template '" + std::string(id) + "'");
}

std::string versioned_id(const PromptTemplate& t) {
    return std::string(t.id) + "@" + std::to_string(t.version);
}

std::string render(std::string_view text, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            auto close = text.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = slots.find(std::string(text.substr(i + 1, close - i - 1)));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string count_word(std::size_t n) {
    static constexpr std::string_view kWords[] = {"zero", "one", "two", "three", "four", "five",
                                                  "six",  "seven", "eight", "nine", "ten"};
    if (n < std::size(kWords)) return std::string(kWords[n]);
    return std::to_string(n);
}

}  // namespace revmine::prompts
