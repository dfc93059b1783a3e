/** Causal what-if panel: evidence staging, a target end state, candidate
 * do-interventions with baseline-vs-result comparison, and the adjustment
 * set / active trail side panels. Rankings render exactly in API order. */

import type { ModelPayload, PosteriorPayload, RankPayload } from "../api";
import { h, VNode } from "../vdom";
import type { ViewState } from "../state";

function fmt(x: number): string {
  return x.toFixed(4);
}

export interface CausalData {
  posterior: PosteriorPayload | null;
  rank: RankPayload | null;
  dsep: { x: string; y: string; z: string[]; separated: boolean } | null;
  trails: string[][] | null;
  backdoor: { x: string; y: string; sets: string[][] } | null;
  contradiction: string | null;
}

export function renderCausalPanel(model: ModelPayload, view: ViewState, data: CausalData): VNode {
  return h(
    "section",
    { class: "panel causal-panel" },
    h("h2", {}, "Causal analysis"),
    data.contradiction
      ? h(
          "div",
          { class: "inline-error evidence-contradiction", role: "alert" },
          `evidence is contradictory: ${data.contradiction}`,
        )
      : null,
    h(
      "div",
      { class: "causal-grid" },
      renderEvidenceColumn(model, view),
      renderWhatIfColumn(model, view, data),
      renderStructureColumn(data),
    ),
  );
}

function renderEvidenceColumn(model: ModelPayload, view: ViewState): VNode {
  return h(
    "div",
    { class: "causal-col evidence-col" },
    h("h3", {}, "Evidence"),
    ...model.nodes.map((n) => {
      const applied = model.evidence[n.id];
      const staged = view.pendingEvidence[n.id];
      const classes = ["evidence-row"];
      if (applied != null) classes.push("applied");
      return h(
        "label",
        { class: classes.join(" "), "data-node": n.id },
        n.name,
        h(
          "select",
          { "data-action": "stage-evidence", "data-node": n.id },
          h("option", { value: "" }, "—"),
          ...n.states.map((s, i) =>
            h(
              "option",
              {
                value: s,
                ...(staged === s || (staged == null && applied === i) ? { selected: "selected" } : {}),
              },
              s,
            ),
          ),
        ),
      );
    }),
    h("button", { "data-action": "apply-evidence" }, "apply evidence"),
    h("button", { "data-action": "clear-evidence" }, "clear"),
  );
}

function renderWhatIfColumn(model: ModelPayload, view: ViewState, data: CausalData): VNode {
  const target = view.causalTarget;
  const consequences = model.nodes.filter((n) => n.kind === "consequence");
  const activation = model.nodes.filter((n) => n.activation);

  const posteriorBlock = data.posterior
    ? h(
        "div",
        { class: "posterior-block" },
        h("h4", {}, "Posteriors under evidence"),
        ...Object.entries(data.posterior).map(([nid, entry]) =>
          h(
            "p",
            { class: "posterior-line", "data-node": nid },
            `${nid}: `,
            entry.states
              .map((s, i) => `${s} ${fmt(entry.probabilities[i]!)}`)
              .join(" / "),
          ),
        ),
      )
    : h("p", { class: "hint" }, "posteriors appear once the CPTs are runtime-ready");

  const rankBlock = data.rank
    ? h(
        "div",
        { class: "rank-block" },
        h("h4", {}, "Intervention ranking"),
        h(
          "p",
          { class: "baseline-line" },
          "baseline ",
          h("strong", { class: "baseline-value", "data-value": String(data.rank.baseline) },
            fmt(data.rank.baseline)),
        ),
        h(
          "table",
          { class: "rank-table" },
          h("tr", {}, h("th", {}, "do(node=state)"), h("th", {}, "result"), h("th", {}, "delta")),
          ...data.rank.entries.map((e) =>
            h(
              "tr",
              { class: "rank-row", "data-node": e.node, "data-state": String(e.state_index) },
              h("td", {}, `do(${e.node}=${e.state})`),
              h("td", { class: "rank-result" }, fmt(e.result)),
              h("td", { class: e.delta <= 0 ? "delta-down" : "delta-up" }, fmt(e.delta)),
            ),
          ),
        ),
      )
    : h("p", { class: "hint" }, "pick a target state to rank interventions");

  return h(
    "div",
    { class: "causal-col whatif-col" },
    h("h3", {}, "What-if"),
    h(
      "form",
      { class: "target-form", "data-action": "set-target" },
      h(
        "select",
        { name: "node" },
        ...consequences.map((n) =>
          h("option", { value: n.id, ...(target?.node === n.id ? { selected: "selected" } : {}) }, n.name),
        ),
      ),
      h(
        "select",
        { name: "state" },
        ...(consequences.find((n) => n.id === target?.node) ?? consequences[0])?.states.map((s) =>
          h("option", { value: s, ...(target?.state === s ? { selected: "selected" } : {}) }, s),
        ) ?? [],
      ),
      h("button", { type: "submit" }, "rank interventions"),
    ),
    h(
      "p",
      { class: "candidates-line" },
      `candidates: ${activation.map((n) => n.id).join(", ") || "none (no activation nodes)"}`,
    ),
    posteriorBlock,
    rankBlock,
  );
}

function renderStructureColumn(data: CausalData): VNode {
  return h(
    "div",
    { class: "causal-col structure-col" },
    h("h3", {}, "Structure checks"),
    h(
      "form",
      { class: "dsep-form", "data-action": "run-dsep" },
      h("input", { name: "x", placeholder: "x" }),
      h("input", { name: "y", placeholder: "y" }),
      h("input", { name: "z", placeholder: "given (comma list)" }),
      h("button", { type: "submit" }, "d-separation"),
    ),
    data.dsep
      ? h(
          "p",
          { class: "dsep-result", "data-separated": String(data.dsep.separated) },
          `${data.dsep.x} and ${data.dsep.y} given {${data.dsep.z.join(", ")}}: `,
          h("strong", {}, data.dsep.separated ? "separated" : "d-connected"),
        )
      : null,
    data.trails
      ? h(
          "div",
          { class: "trails-block" },
          h("h4", {}, "Active trails"),
          data.trails.length
            ? h(
                "ul",
                { class: "trail-list" },
                ...data.trails.map((t) => h("li", { class: "trail" }, t.join(" → "))),
              )
            : h("p", { class: "hint" }, "no active trails"),
        )
      : null,
    data.backdoor
      ? h(
          "div",
          { class: "backdoor-block" },
          h("h4", {}, `Adjustment sets (${data.backdoor.x} → ${data.backdoor.y})`),
          h(
            "ul",
            { class: "backdoor-list" },
            ...data.backdoor.sets.map((s) =>
              h("li", { class: "backdoor-set" }, s.length ? `{${s.join(", ")}}` : "{} (nothing to adjust)"),
            ),
          ),
        )
      : null,
  );
}
