// CPT editor semantics: rows in server order, last state shown as the
// normalization remainder, over-unity drafts blocked with the offending sum,
// deterministic gate tables read-only.

import { describe, expect, it } from "vitest";
import cptQueue from "../fixtures/cpt_queue_saturation.json";
import cptGate from "../fixtures/cpt_gate.json";
import type { CptPayload } from "../src/api";
import { configKey, renderCptPanel, validateRowDraft } from "../src/panels/cpt";
import { findAll, findByClass, renderToString, textOf } from "../src/vdom";

const queue = cptQueue as unknown as CptPayload;
const gate = cptGate as unknown as CptPayload;

describe("row validation", () => {
  it("blocks a (0.8, 0.4) three-state row with the offending sum", () => {
    const result = validateRowDraft([0.8, 0.4], 3);
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.sum).toBeCloseTo(1.2, 12);
      expect(result.message).toContain("sum exceeds 1");
    }
  });

  it("derives the last state from (0.2, 0.3)", () => {
    const result = validateRowDraft([0.2, 0.3], 3);
    expect(result).toEqual({ ok: true, lastState: 0.5 });
  });

  it("rejects values outside the unit interval", () => {
    const result = validateRowDraft([1.3], 2);
    expect(result.ok).toBe(false);
  });

  it("requires every asked state", () => {
    const result = validateRowDraft([0.2, null], 3);
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.message).toContain("fill every");
  });

  it("accepts an exact sum of one", () => {
    expect(validateRowDraft([0.6, 0.4], 3)).toEqual({ ok: true, lastState: 0 });
  });
});

describe("CPT panel rendering", () => {
  it("lists rows in the server's enumeration order", () => {
    const tree = renderCptPanel(queue);
    const rows = findAll(tree, (n) => n.tag === "tr" && "data-config" in n.attrs);
    const keys = rows.map((r) => r.attrs["data-config"]);
    expect(keys).toEqual(queue.rows.map((r) => configKey(r.config)));
    expect(keys[0]).toBe("0,0,0");
    expect(keys[keys.length - 1]).toBe("1,1,1");
  });

  it("labels parent configurations with state names", () => {
    const tree = renderCptPanel(queue);
    const html = renderToString(tree);
    expect(html).toContain("service-degradation=true");
    expect(html).toContain("queue-protection=fails");
  });

  it("marks the derived column", () => {
    const tree = renderCptPanel(queue);
    const header = findAll(tree, (n) => n.tag === "th" && n.attrs["class"] === "derived-col");
    expect(header.length).toBe(1);
    expect(textOf(header[0]!)).toBe("critical (derived)");
  });

  it("flags an over-unity draft inline and disables save", () => {
    const draft = { configKey: "0,0,0", cells: [0.8, 0.4] };
    const tree = renderCptPanel(queue, draft);
    const invalid = findByClass(tree, "invalid");
    expect(invalid.length).toBe(1);
    const error = findByClass(invalid[0]!, "row-error")[0]!;
    expect(textOf(error)).toContain("sum exceeds 1 (1.2000)");
    const save = findAll(invalid[0]!, (n) => n.tag === "button")[0]!;
    expect(save.attrs["disabled"]).toBe("disabled");
  });

  it("shows the auto-completed last state for a valid draft", () => {
    const draft = { configKey: "0,0,0", cells: [0.2, 0.3] };
    const tree = renderCptPanel(queue, draft);
    const row = findAll(tree, (n) => n.attrs["data-config"] === "0,0,0")[0]!;
    const derived = findAll(row, (n) => n.tag === "td" && n.attrs["class"] === "derived-col")[0]!;
    expect(textOf(derived)).toBe("0.5");
  });

  it("renders gate tables read-only", () => {
    const tree = renderCptPanel(gate);
    expect(gate.deterministic).toBe(true);
    expect(findAll(tree, (n) => n.tag === "input").length).toBe(0);
    expect(renderToString(tree)).toContain("read-only");
    const tags = findByClass(tree, "readonly-tag");
    expect(tags.length).toBe(gate.rows.length);
  });

  it("surfaces staleness", () => {
    const stale = { ...queue, stale: true };
    expect(renderToString(renderCptPanel(stale))).toContain("structure changed");
  });
});
