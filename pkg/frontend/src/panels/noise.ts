/** Noise analysis: per question, the enumerated answers, a location marker
 * per estimator, and three spread bars drawn in probability space - the
 * equal-average mean plus/minus its sample sd (clamped by the service), the
 * anchored 95% Beta interval, and the consensus 95% posterior interval.
 * Every coordinate is an API number mapped to percentages; nothing is
 * aggregated in the browser. */

import type { EstimateRow } from "../api";
import { h, VNode } from "../vdom";

export interface Bar {
  kind: "spread" | "anchored" | "consensus";
  label: string;
  lo: number;
  hi: number;
}

export function questionBars(row: EstimateRow): Bar[] {
  const bars: Bar[] = [];
  if (row.spread) {
    bars.push({ kind: "spread", label: "mean ± sd", lo: row.spread[0], hi: row.spread[1] });
  }
  if (row.anchored_interval) {
    bars.push({
      kind: "anchored",
      label: "anchored 95%",
      lo: row.anchored_interval[0],
      hi: row.anchored_interval[1],
    });
  }
  if (row.consensus_interval) {
    bars.push({
      kind: "consensus",
      label: "consensus 95%",
      lo: row.consensus_interval[0],
      hi: row.consensus_interval[1],
    });
  }
  return bars;
}

export function barGeometry(bar: Bar): { leftPct: number; widthPct: number } {
  return { leftPct: bar.lo * 100, widthPct: (bar.hi - bar.lo) * 100 };
}

function pct(x: number): string {
  return `${(x * 100).toFixed(3)}%`;
}

function fmt(x: number): string {
  return x.toFixed(4);
}

export function renderNoiseView(rows: EstimateRow[]): VNode {
  return h(
    "section",
    { class: "panel noise-panel" },
    h("h2", {}, "Noise analysis"),
    ...rows.map(renderQuestionRow),
  );
}

function renderQuestionRow(row: EstimateRow): VNode {
  if (row.n === 0) {
    // the uniform-reference consensus value exists even without answers;
    // an empty ledger still reads as unanswered
    return h(
      "article",
      { class: "noise-question unanswered", "data-question": row.question_id },
      h("p", { class: "question-text" }, row.text),
      h("p", { class: "hint" }, "no answers yet"),
    );
  }

  const bars = questionBars(row);
  const markers = Object.entries(row.estimates)
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([name, value]) =>
      h("span", {
        class: `marker marker-${name}`,
        style: `left:${pct(value)}`,
        title: `${name}: ${fmt(value)}`,
        "data-estimator": name,
        "data-value": String(value),
      }),
    );

  return h(
    "article",
    { class: "noise-question", "data-question": row.question_id },
    h("p", { class: "question-text" }, row.text),
    h(
      "p",
      { class: "answers-line" },
      `answers (${row.n}): ${row.values.map(fmt).join(", ")}`,
      row.sample_sd != null ? ` · sample sd ${fmt(row.sample_sd)}` : "",
    ),
    h(
      "div",
      { class: "bars" },
      ...bars.map((bar) => {
        const geom = barGeometry(bar);
        return h(
          "div",
          { class: "bar-lane" },
          h("span", { class: "bar-label" }, bar.label),
          h(
            "div",
            { class: "bar-track" },
            h("div", {
              class: `bar bar-${bar.kind}`,
              style: `left:${geom.leftPct.toFixed(3)}%;width:${geom.widthPct.toFixed(3)}%`,
              "data-lo": String(bar.lo),
              "data-hi": String(bar.hi),
              title: `[${fmt(bar.lo)}, ${fmt(bar.hi)}]`,
            }),
          ),
        );
      }),
      h("div", { class: "bar-lane markers-lane" }, h("div", { class: "bar-track" }, ...markers)),
    ),
  );
}
