/** CPT editor: one row per parent configuration in the server's enumeration
 * order. The user types the first K-1 probabilities; the last state is shown
 * as the normalization remainder. A row whose asked states already exceed 1
 * is flagged with the offending sum and cannot be saved - mirroring the
 * service rule so nothing invalid even leaves the browser. */

import type { CptPayload } from "../api";
import { h, VNode } from "../vdom";

export const ROW_SUM_TOLERANCE = 1e-9;

export type RowValidation =
  | { ok: true; lastState: number }
  | { ok: false; sum: number | null; message: string };

/** Mirror of the server's last-state completion rule for inline feedback. */
export function validateRowDraft(cells: (number | null)[], k: number): RowValidation {
  if (cells.length !== k - 1) {
    return { ok: false, sum: null, message: `expected ${k - 1} values` };
  }
  let sum = 0;
  for (const cell of cells) {
    if (cell == null || Number.isNaN(cell)) {
      return { ok: false, sum: null, message: "fill every asked state" };
    }
    if (cell < 0 || cell > 1) {
      return { ok: false, sum: null, message: `${cell} is outside [0, 1]` };
    }
    sum += cell;
  }
  if (sum > 1 + ROW_SUM_TOLERANCE) {
    return { ok: false, sum, message: `sum exceeds 1 (${sum.toFixed(4)})` };
  }
  return { ok: true, lastState: Math.min(1, Math.max(0, 1 - sum)) };
}

export interface RowDraft {
  /** row config the draft belongs to, joined by "," */
  configKey: string;
  cells: (number | null)[];
}

export function configKey(config: number[]): string {
  return config.join(",");
}

function fmt(value: number): string {
  return Number(value.toFixed(6)).toString();
}

export function renderCptPanel(cpt: CptPayload, draft?: RowDraft): VNode {
  const header = h(
    "tr",
    {},
    ...cpt.parents.map((p) => h("th", { class: "parent-col" }, p)),
    ...cpt.states.map((s, i) =>
      h("th", { class: i === cpt.k - 1 ? "derived-col" : "asked-col" }, i === cpt.k - 1 ? `${s} (derived)` : s),
    ),
    h("th", {}, ""),
  );

  const rows = cpt.rows.map((row) => {
    const key = configKey(row.config);
    const editing = draft && draft.configKey === key ? draft : null;
    const validation = editing ? validateRowDraft(editing.cells, cpt.k) : null;
    const classes = ["cpt-row", `status-${row.status}`];
    if (validation && !validation.ok) classes.push("invalid");

    const askedCells = [];
    for (let s = 0; s < cpt.k - 1; s++) {
      const current = editing ? editing.cells[s] : row.values ? row.values[s] : null;
      askedCells.push(
        h(
          "td",
          { class: "asked-col" },
          cpt.deterministic
            ? (row.values ? fmt(row.values[s]!) : "")
            : h("input", {
                "data-action": "edit-cell",
                "data-config": key,
                "data-state": String(s),
                value: current == null ? "" : fmt(current),
              }),
        ),
      );
    }

    let derived: string;
    if (validation) {
      derived = validation.ok ? fmt(validation.lastState) : "—";
    } else {
      derived = row.values ? fmt(row.values[cpt.k - 1]!) : "";
    }

    return h(
      "tr",
      { class: classes.join(" "), "data-config": key },
      ...row.config.map((idx, pi) =>
        h("td", { class: "parent-col" }, cardLabel(cpt, pi, idx)),
      ),
      ...askedCells,
      h("td", { class: "derived-col" }, derived),
      h(
        "td",
        { class: "row-actions" },
        cpt.deterministic
          ? h("span", { class: "readonly-tag" }, "deterministic")
          : h(
              "button",
              {
                "data-action": "save-row",
                "data-config": key,
                ...(validation && !validation.ok ? { disabled: "disabled" } : {}),
              },
              "save",
            ),
        validation && !validation.ok
          ? h("span", { class: "row-error", role: "alert" }, validation.message)
          : null,
      ),
    );
  });

  return h(
    "section",
    { class: "panel cpt-panel" },
    h("h2", {}, `Conditional probabilities: ${cpt.node}`),
    cpt.stale
      ? h("div", { class: "inline-error" }, "structure changed since these rows were written; refresh the table")
      : null,
    cpt.deterministic ? h("p", { class: "hint" }, "gate tables are generated and read-only") : null,
    h("table", { class: "cpt-table" }, header, ...rows),
  );
}

function cardLabel(cpt: CptPayload, parentIndex: number, stateIndex: number): string {
  const labels = cpt.parent_states[parentIndex];
  const label = labels ? labels[stateIndex] : undefined;
  return `${cpt.parents[parentIndex]}=${label ?? stateIndex}`;
}
