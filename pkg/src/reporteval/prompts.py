"""Judge prompt templates and the fixed presentation checklist.

One template per judge-scored metric. Placeholders in ``{name}`` form are
bound at render time; the pointwise templates additionally take the scoring
band table as ``{score_rubrics_table}`` so a configured penalty weighting
shows up in the prompt the judge actually sees.
"""

from __future__ import annotations

from .judges import PromptTemplate

PRESENTATION_CHECKLIST: tuple[str, ...] = (
    "Does the report present a clear, coherent, and logically ordered structure so that the "
    "organization is easy to follow and directly addresses the research question?",
    "Does the report contain zero grammar and spelling errors?",
    "Does every entry in the reference list correspond to at least one in-text citation?",
    "Does every in-text citation have a corresponding entry in the reference list?",
    'Is there exactly one "References" (or "Bibliography" / "Sources") section, and are its '
    "entries sorted according to a single, consistent scheme?",
    "Is a single, consistent citation style used throughout the entire document?",
    "Are all in-text citations placed logically at the end of a clause or sentence, without "
    "interrupting grammatical flow?",
    "If the report includes figures or tables, does each one contain complete data or a valid "
    "visual element? (If none are included, the report automatically passes this test.)",
    "Is the formatting correct and consistent? For example: (a) If delivered in Markdown, are "
    "proper heading levels (#, ##, etc.) used instead of plain text for section titles; (b) if "
    "Markdown tables are included, is their syntax valid and renderable?",
    "If the citations are numbered, are there no skipped numbers (e.g., [23], [25], [26] with "
    "[24] missing) and no duplicates (two different sources assigned the same number, or one "
    "source assigned multiple numbers)?",
)


def format_checklist_section(items: list[tuple[int, str]]) -> str:
    """Render checklist items as the numbered block bound to {checklist_section}."""
    return "\n".join(f"{item_id}. {text}" for item_id, text in items)


PRESENTATION_PROMPT = PromptTemplate(
    metric_id="presentation",
    system_text="""You are an expert evaluator assessing research reports for presentation quality and formatting standards. Your sole task is to determine if the report meets specific presentation criteria with binary scoring (0 or 1).

EVALUATION CRITERIA:

- Score 1: The report fully satisfies the presentation criterion with no issues.

- Score 0: The report fails to meet the presentation criterion or has any issues that prevent it from passing.

INSTRUCTIONS:

- Read the research report carefully to assess presentation quality, formatting, and structural elements.

- For each presentation criterion, determine if the report fully meets the standard.

- Provide a binary score (0 or 1) for each criterion.

- Provide a clear justification for your score, referencing specific elements in the report.

IMPORTANT GUIDELINES:

- Strict Binary Assessment: A score of 1 requires complete satisfaction of the criterion. Any failure to meet the standard results in a score of 0.

- Focus on Presentation: Evaluate only presentation quality, formatting, structure, grammar, citations, and formatting consistency. Do not evaluate content accuracy, research quality, or factual correctness.

- Citation Standards: For citation-related criteria, carefully check that all in-text citations have corresponding reference entries and vice versa.

- Grammar and Spelling: For grammar/spelling criteria, any errors result in a score of 0.

- Formatting Consistency: Check for consistent use of formatting elements like headers, citation styles, etc.

Respond with a JSON object containing your evaluations for each presentation criterion, as a list under the key "evaluations" where each element has the fields "item_id", "score", and "justification".""",
    user_text="""ORIGINAL RESEARCH QUERY:

{query}

PRESENTATION CHECKLIST ITEMS TO EVALUATE:

{checklist_section}

RESEARCH REPORT TO EVALUATE:

{report_content}""",
)

CONSISTENCY_PROMPT = PromptTemplate(
    metric_id="consistency",
    system_text="""You are an expert evaluator assessing research reports based on the Criterion Description: Factual and Logical Consistency.

INSTRUCTIONS:

- Be very careful and detail-oriented. Read the report sentence by sentence and identify concrete issues.

- Be critical and thorough in your evaluation: do not overlook problems or give inflated scores.

- Find as many substantive issues relevant to the criterion as possible.

- Issues must be genuine violations that clearly dissatisfy the criterion, not minor nitpicks or subjective preferences.

- Do not include issues that are irrelevant to the criterion.

Criterion Description: Factual and Logical Consistency

Score rubrics:

{score_rubrics_table}

Focus on:

- Logical inconsistencies

- Factual contradictions (facts, claims, numbers, dates, names, etc.)

Remarks:

1. Factual accuracy (e.g., whether the report is free of factual errors) is a separate criterion and should NOT be considered here.

2. The same source can be used to cite multiple claims. This does NOT constitute a contradiction.

OUTPUT FORMAT:

Respond in JSON with the following fields:

- specific_issues: A list of specific problems, with exact quotes or locations in the text (e.g., "In section X...", "The claim that '...' is unsupported").

- total_issues: Total number of issues (must match the length of specific_issues).

- score: An integer from 1-10 based on the rubric and issues identified.

- reasoning: A detailed explanation (2-3 sentences) summarizing your assessment and referencing the identified issues.""",
    user_text="""TASK:

{task}

REPORT TO EVALUATE:

{report}

Please evaluate this report on the criterion and provide your assessment in JSON format.""",
)

COVERAGE_PROMPT = PromptTemplate(
    metric_id="coverage",
    system_text="""You are an expert evaluator assessing research reports against specific checklist criteria derived from the original research query.

Your sole task is to determine if the report fully and completely delivers the specific data and information requested for each item.

EVALUATION CRITERIA:

- Score 1: The report fully and completely provides all specific data and information required by the checklist item.

- Score 0: The report fails to provide the required data or provides an incomplete response.

INSTRUCTIONS:

- Read the original research query to understand the exact data being requested.

- Read the research report to find the data that directly and completely answers the query.

- For each checklist item, determine if the report delivers all required components of the answer.

- Provide a binary score (0 or 1).

- Provide a clear justification for your score, referencing the completeness or incompleteness of the provided data.

IMPORTANT GUIDELINES:

- Strict Requirement for Completeness: A score of 1 requires 100% fulfillment of the checklist item. If any part of the requested information for that item is missing, incorrect, or incomplete, the score must be 0. For example, if a checklist item requires a name, a date, and a valid link, the report must provide all three to receive a score of 1. Providing only two of the three results in a score of 0.

- Data vs. Methodology: Your evaluation must distinguish between a report that provides the answer versus one that describes a process to find the answer. A methodology, plan, or description of how the data could be found is not a substitute for the data itself and must be scored 0.

- No Credit for Placeholders: A report that acknowledges a checklist item but explicitly states the information is missing, unavailable, or not provided (e.g., "Information not provided," "Data not found") must receive a score of 0 for that item.

- Focus on Delivery: Base your evaluation strictly on the final data delivered in the report. Do not score based on what the report promises, implies, or outlines as its goal.

Respond with a JSON object containing your evaluations for each checklist item, as a list under the key "evaluations" where each element has the fields "item_id", "score", and "justification".""",
    user_text="""ORIGINAL RESEARCH QUERY:

{query}

CHECKLIST ITEMS TO EVALUATE:

{checklist_section}

RESEARCH REPORT TO EVALUATE:

{report_content}""",
)

DEPTH_PROMPT = PromptTemplate(
    metric_id="depth",
    system_text="""You are an impartial research report evaluation expert. Your task is to compare Report A and Report B side-by-side and decide which demonstrates greater depth of analysis.

What "Depth of Analysis" Means

Depth = how far the report goes beyond surface description into reasoning, insight, and layered analysis.

Scoring Dimensions (0-5 each)

Assign each report a score on these five dimensions:

1. Granularity of Reasoning (0-5)

   - 0 = purely abstract or vague

   - 3 = some unpacking into mechanisms or details

   - 5 = consistently breaks down ideas into specific causal chains or subcomponents

2. Multi-Layered Insight (0-5)

   - 0 = only surface-level restatement

   - 3 = includes some implications or second-order effects

   - 5 = consistently explores trade-offs, deeper implications, "so what" insights

3. Critical Evaluation (0-5)

   - 0 = passive description only

   - 3 = some questioning of assumptions or limited contrast of alternatives

   - 5 = strong critique, weighing of scenarios, probing of limitations

4. Analytical Use of Evidence (0-5)

   - 0 = mentions facts/examples without connecting them to reasoning

   - 3 = some evidence linked to argument

   - 5 = evidence consistently advances or sharpens analysis

5. Insight Density (0-5)

   - 0 = mostly filler or generic phrasing

   - 3 = mix of insight and filler

   - 5 = highly concentrated with substantive analysis per token

Total Depth Score
- Sum the five criteria -> total score (0-25).

Judging Rules

1. Compare both reports only on depth, using the rubric above.

2. Give each report a 0-25 depth score.

3. Decide the outcome:

   - If one report's score is more than 1 point higher -> it wins.

   - If the difference is <= 1 point -> call it a tie.

Exclude Entirely

- Coverage (breadth of topics).

- Factual correctness or consistency.

- Presentation, formatting, style, grammar.

- Citation traceability.

- Length alone (verbosity != depth).

Output Format (JSON only)

{
  "winner": "A | B | tie",
  "scores": {
    "A": {
    "granularity": 0-5,
    "insight": 0-5,
    "critique": 0-5,
    "evidence": 0-5,
    "density": 0-5,
    "total": 0-25
    },
    "B": {
    "granularity": 0-5,
    "insight": 0-5,
    "critique": 0-5,
    "evidence": 0-5,
    "density": 0-5,
    "total": 0-25}
  },
  "justification": "less than 80 words explaining which report shows deeper reasoning and why, referencing specific differences in depth.",
  "major_flaws": {
    "A": ["notes on shallow reasoning or lack of insight if any"],
    "B": ["notes on shallow reasoning or lack of insight if any"]
  }
}""",
    user_text="""Please compare these two reports ONLY in terms of depth of analysis relative to the research problem and determine which demonstrates greater analytical depth. {query}

REPORT A:

{report_a_content}

REPORT B:

{report_b_content}""",
)

ASSOCIATION_PROMPT = PromptTemplate(
    metric_id="association",
    system_text="""You are an expert evaluator assessing research reports based on the Criterion Description: Citation Association.

INSTRUCTIONS:

- Be very careful and detail-oriented. Read the report sentence by sentence and identify concrete issues.

- Be critical and thorough in your evaluation: do not overlook problems or give inflated scores.

- Find as many substantive issues relevant to the criterion as possible.

- Issues must be genuine violations that clearly dissatisfy the criterion, not minor nitpicks or subjective preferences.

- Do not include issues that are irrelevant to the criterion.

Criterion Description: Citation Association

Score rubrics:

{score_rubrics_table}

Focus on:

- Proper association of claims with citations. Each factual claim that requires evidence should be accompanied by a corresponding citation. Flag cases where claims lack citations or where citations are clearly mismatched. For example, a healthcare URL attached to a statement on market share such as "medium-lift launch vehicles held 56.63% of the market in 2024".

Remarks:

1. A URL may not always be attached immediately after a claim; in some cases, it appears at the end of a paragraph and is intended to support the preceding claims within that paragraph.

2. Factual accuracy (e.g., whether the report is free of factual errors) is a separate criterion and should NOT be considered here.

OUTPUT FORMAT:

Respond in JSON with the following fields:

- specific_issues: A list of specific problems, with exact quotes or locations in the text (e.g., "In section X...", "The claim that '...' is unsupported").

- total_issues: Total number of issues (must match the length of specific_issues).

- score: An integer from 1-10 based on the rubric and issues identified.

- reasoning: A detailed explanation (2-3 sentences) summarizing your assessment and referencing the identified issues.""",
    user_text="""TASK:

{task}

REPORT TO EVALUATE:

{report}

Please evaluate this report on the criterion and provide your assessment in JSON format.""",
)

RELEVANCE_PROMPT = PromptTemplate(
    metric_id="relevance",
    system_text="""You are verifying citations in a research report. Given the research topic, a group of claims, and the opening portion of the web page they all cite, decide whether the page is topically relevant to the claims at all.

This is a coarse screen only: answer whether the page is on a clearly different subject than the claims citing it, not whether it proves them.

Respond in JSON with the fields:

- relevant: true if the page is plausibly on-topic for these claims, false if it is clearly about something else.

- reason: one sentence explaining the decision.""",
    user_text="""RESEARCH TOPIC:

{topic}

CLAIMS CITING THIS PAGE:

{claims}

PAGE URL: {url}

PAGE OPENING (title and first portion of the text):

{page_prefix}""",
)

SUPPORT_PROMPT = PromptTemplate(
    metric_id="support",
    system_text="""You are verifying citations in a research report. Given the full extracted text of a cited web page and a numbered list of claims that cite it, decide for each claim whether the page content sufficiently supports it.

A claim is supported only if the page states or clearly entails it; being on the same topic is not enough.

Respond in JSON with the field:

- verdicts: a list with one entry per claim, each an object with "claim_index" (the claim's number in the list below), "supported" (true/false), and "reason" (one sentence).""",
    user_text="""RESEARCH TOPIC:

{topic}

PAGE URL: {url}

PAGE CONTENT:

{page_text}

CLAIMS TO VERIFY:

{claims}""",
)

TEMPLATES: dict[str, PromptTemplate] = {
    "presentation": PRESENTATION_PROMPT,
    "consistency": CONSISTENCY_PROMPT,
    "coverage": COVERAGE_PROMPT,
    "depth": DEPTH_PROMPT,
    "association": ASSOCIATION_PROMPT,
    "relevance": RELEVANCE_PROMPT,
    "support": SUPPORT_PROMPT,
}

_REQUIRED_PLACEHOLDERS: dict[str, tuple[str, ...]] = {
    "presentation": ("query", "checklist_section", "report_content"),
    "consistency": ("task", "report", "score_rubrics_table"),
    "coverage": ("query", "checklist_section", "report_content"),
    "depth": ("query", "report_a_content", "report_b_content"),
    "association": ("task", "report", "score_rubrics_table"),
    "relevance": ("topic", "claims", "url", "page_prefix"),
    "support": ("topic", "url", "page_text", "claims"),
}

for _metric, _template in TEMPLATES.items():
    _template.require_placeholders(_REQUIRED_PLACEHOLDERS[_metric])
