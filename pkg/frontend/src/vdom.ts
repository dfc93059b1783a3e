/** Minimal virtual tree: panels render plain data, tests assert on it, and
 * the browser glue turns it into real DOM. No framework, no diffing. */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: Child[];
}

export type Child = VNode | string;

export function h(tag: string, attrs: Record<string, string> = {}, ...children: (Child | Child[] | null | undefined)[]): VNode {
  const flat: Child[] = [];
  for (const c of children) {
    if (c == null) continue;
    if (Array.isArray(c)) flat.push(...c.filter((x): x is Child => x != null));
    else flat.push(c);
  }
  return { tag, attrs, children: flat };
}

const VOID_TAGS = new Set(["br", "hr", "img", "input", "meta", "link"]);

function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderToString(node: Child): string {
  if (typeof node === "string") return escapeHtml(node);
  const attrs = Object.entries(node.attrs)
    .map(([k, v]) => ` ${k}="${escapeHtml(v)}"`)
    .join("");
  if (VOID_TAGS.has(node.tag) && node.children.length === 0) {
    return `<${node.tag}${attrs}>`;
  }
  const inner = node.children.map(renderToString).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Depth-first search over a rendered tree; handy in tests and event glue. */
export function findAll(node: Child, predicate: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits: VNode[] = [];
  if (predicate(node)) hits.push(node);
  for (const child of node.children) hits.push(...findAll(child, predicate));
  return hits;
}

export function findByClass(node: Child, className: string): VNode[] {
  return findAll(node, (n) => (n.attrs["class"] ?? "").split(" ").includes(className));
}

export function textOf(node: Child): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join("");
}

const SVG_TAGS = new Set(["svg", "g", "line", "rect", "circle", "text", "path", "title"]);

/** Browser-side materialization. Never called from tests. */
export function toDom(node: Child, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = SVG_TAGS.has(node.tag)
    ? doc.createElementNS("http://www.w3.org/2000/svg", node.tag)
    : doc.createElement(node.tag);
  for (const [k, v] of Object.entries(node.attrs)) el.setAttribute(k, v);
  for (const child of node.children) el.appendChild(toDom(child, doc));
  return el;
}
