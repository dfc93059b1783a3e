/** Tokenized questionnaire form: the scoped questions with their conditional
 * text, a numeric field, and the seven quick-set buttons. Quick-set presses
 * post the label; the service maps it to the stored value. Manual entries
 * outside [0, 1] are rejected right here, mirroring the service rule. */

import type { CapturePage, QuestionPayload } from "../api";
import { h, VNode } from "../vdom";

/** Display copy of the service's quick-set scale. Submission sends the
 * label, so the service stays the source of truth for the stored value. */
export const QUICK_SET: readonly (readonly [string, number])[] = [
  ["None", 0.0],
  ["Very low", 0.05],
  ["Low", 0.2],
  ["Medium", 0.5],
  ["High", 0.8],
  ["Very high", 0.95],
  ["Evidence", 1.0],
] as const;

export type AnswerValidation = { ok: true; value: number } | { ok: false; message: string };

export function validateManualAnswer(raw: string): AnswerValidation {
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    return { ok: false, message: "enter a probability between 0 and 1" };
  }
  if (value < 0 || value > 1) {
    return { ok: false, message: `${raw} is outside [0, 1]` };
  }
  return { ok: true, value };
}

export interface SubmissionStatus {
  questionId: string;
  kind: "accepted" | "rejected";
  message: string;
}

export function renderCaptureForm(page: CapturePage, status?: SubmissionStatus): VNode {
  return h(
    "section",
    { class: "panel capture-panel" },
    h("h2", {}, "Probability capture"),
    h(
      "p",
      { class: "scope-line" },
      `scope: ${page.scope.join(", ")} · link expires ${page.expires_at}`,
    ),
    ...page.questions.map((q) => renderQuestion(q, status)),
  );
}

export function renderExpiredToken(): VNode {
  return h(
    "section",
    { class: "panel capture-panel" },
    h("h2", {}, "Capture link unavailable"),
    h(
      "p",
      { class: "inline-error" },
      "This capture link is unknown or has expired. Ask the model owner for a fresh one.",
    ),
  );
}

function renderQuestion(q: QuestionPayload, status?: SubmissionStatus): VNode {
  const mine = status && status.questionId === q.id ? status : null;
  return h(
    "article",
    { class: "question", "data-question": q.id },
    h("p", { class: "question-text" }, q.text),
    h(
      "form",
      { class: "answer-form", "data-action": "submit-answer", "data-question": q.id },
      h("input", { name: "value", inputmode: "decimal", placeholder: "0.00 – 1.00" }),
      h("button", { type: "submit" }, "submit"),
      h(
        "span",
        { class: "quick-set" },
        ...QUICK_SET.map(([label, value]) =>
          h(
            "button",
            {
              type: "button",
              class: "quick-set-button",
              "data-action": "quick-set",
              "data-question": q.id,
              "data-label": label,
              title: `records ${value}`,
            },
            label,
          ),
        ),
      ),
    ),
    mine
      ? h(
          "p",
          { class: mine.kind === "accepted" ? "submit-ok" : "inline-error", role: "status" },
          mine.message,
        )
      : null,
  );
}
