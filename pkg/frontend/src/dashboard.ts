/** Browser shell: renders a dashboard, wires hover linking, legend
 * toggles, the mapping editor, and the add-visualization dialog.
 *
 * Every mutation goes through the HTTP API; the shell only caches the
 * snapshots the server returns. Hovers resolve locally over the link
 * table, so highlighting works without a round trip.
 */

import { StatlinkApi, ApiError } from "./api.js";
import {
  cancelMapping,
  clickItem,
  dragRegion,
  startMapping,
  type MappingPhase,
} from "./mapping.js";
import { PLOT, renderLegend, renderViz, timeIndexForX } from "./render.js";
import {
  applySnapshot,
  clearHover,
  hoverDispatch,
  initialState,
  legendToggleBody,
  setLegendScroll,
  type ViewState,
} from "./state.js";
import type {
  CatalogEntryWire,
  HighlightItemWire,
  ItemRefWire,
  MutationResponseWire,
  RuleEndpointSpec,
  UserVizKind,
  VizPayloadWire,
  VizType,
} from "./types.js";

const STAT_TYPES: VizType[] = ["line", "bar", "area", "pie", "scatter"];

interface ViewBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function itemRefOf(target: Element): ItemRefWire | null {
  const hit = target.closest("[data-local-id]");
  if (!hit) return null;
  const vizId = hit.getAttribute("data-viz-id");
  const localId = hit.getAttribute("data-local-id");
  if (!vizId || !localId) return null;
  return { viz_id: vizId, local_id: localId };
}

export class DashboardShell {
  private state: ViewState | null = null;
  private payloads = new Map<string, VizPayloadWire>();
  private renderErrors = new Map<string, string>();
  private linkMode = false;
  private mapping: MappingPhase = { phase: "idle" };
  private notice = "";
  private mapViews = new Map<string, ViewBox>();
  private dragStart: { vizId: string; viewX: number; x: number; y: number } | null = null;
  private popups: HTMLElement[] = [];
  private dialog: HTMLElement | null = null;

  constructor(
    private readonly api: StatlinkApi,
    private readonly root: HTMLElement,
  ) {
    this.wireEvents();
  }

  async open(dashboardId: string): Promise<void> {
    const snapshot = await this.api.getDashboard(dashboardId);
    this.state = initialState(snapshot);
    await this.refreshPayloads();
    this.render();
  }

  private get dashboardId(): string {
    if (!this.state) throw new Error("no dashboard open");
    return this.state.dashboard.dashboard_id;
  }

  private async refreshPayloads(vizIds?: string[]): Promise<void> {
    if (!this.state) return;
    const wanted = vizIds ?? this.state.dashboard.visualizations.map((v) => v.viz_id);
    for (const vizId of wanted) {
      try {
        this.payloads.set(vizId, await this.api.getPayload(this.dashboardId, vizId));
        this.renderErrors.delete(vizId);
      } catch (err) {
        this.renderErrors.set(vizId, err instanceof Error ? err.message : String(err));
      }
    }
    for (const known of [...this.payloads.keys()]) {
      if (!this.state.dashboard.visualizations.some((v) => v.viz_id === known)) {
        this.payloads.delete(known);
      }
    }
  }

  private applyMutation(m: MutationResponseWire): void {
    if (!this.state) return;
    this.state = applySnapshot(this.state, {
      dashboard: m.dashboard,
      link_table: m.link_table,
    });
  }

  /** Run a server mutation; on failure surface the error as a notice. */
  private async mutate(
    action: (revision: number) => Promise<MutationResponseWire>,
    refresh?: string[],
  ): Promise<boolean> {
    if (!this.state) return false;
    try {
      this.applyMutation(await action(this.state.dashboard.revision));
      await this.refreshPayloads(refresh);
      return true;
    } catch (err) {
      this.notice = err instanceof ApiError ? `${err.errorName}: ${err.detail}` : String(err);
      return false;
    } finally {
      this.render();
    }
  }

  // ------------------------------------------------------------------ render

  private render(): void {
    if (!this.state) return;
    this.clearPopups();
    this.root.textContent = "";
    this.root.append(this.renderToolbar(), this.renderNotice(), this.renderPanels());
    if (this.dialog) this.root.append(this.dialog);
    this.restoreLegendScroll();
  }

  private renderToolbar(): HTMLElement {
    const bar = el("div", "toolbar");
    const title = el("h1", "dashboard-title", this.state!.dashboard.title);
    const addBtn = el("button", "add-viz", "Add visualization");
    addBtn.setAttribute("data-action", "open-dialog");
    const linkBtn = el(
      "button",
      this.linkMode ? "link-mode active" : "link-mode",
      this.linkMode ? "Cancel linking" : "Link items",
    );
    linkBtn.setAttribute("data-action", "toggle-mapping");
    bar.append(title, addBtn, linkBtn, this.renderRuleList());
    return bar;
  }

  private renderRuleList(): HTMLElement {
    const wrap = el("div", "rule-list");
    const rules = this.state!.dashboard.manual_rules;
    if (rules.length === 0) return wrap;
    wrap.append(el("span", "rule-list-label", "manual links:"));
    rules.forEach((rule, i) => {
      const row = el("span", "rule-row", `${rule.from.local_id} ↔ ${rule.to.local_id}`);
      const remove = el("button", "rule-remove", "×");
      remove.setAttribute("data-action", "delete-rule");
      remove.setAttribute("data-rule-index", String(i));
      remove.setAttribute("title", "remove this link");
      row.append(remove);
      wrap.append(row);
    });
    return wrap;
  }

  private renderNotice(): HTMLElement {
    const box = el("div", "notice-area");
    const mappingNotice =
      this.mapping.phase === "armed"
        ? this.mapping.notice
        : this.linkMode
          ? "click an item to start a link, or drag across a chart's time axis for the second endpoint"
          : null;
    const text = mappingNotice ?? this.notice;
    if (text) {
      box.append(el("div", mappingNotice ? "notice mapping" : "notice", text));
    }
    return box;
  }

  private renderPanels(): HTMLElement {
    const grid = el("div", "panels");
    for (const viz of this.state!.dashboard.visualizations) {
      grid.append(this.renderPanel(viz.viz_id));
    }
    return grid;
  }

  private renderPanel(vizId: string): HTMLElement {
    const viz = this.state!.dashboard.visualizations.find((v) => v.viz_id === vizId)!;
    const panel = el("div", `panel layout-${viz.layout_hint}`);
    panel.setAttribute("data-panel", vizId);
    const payload = this.payloads.get(vizId);
    const header = el("div", "panel-header");
    const title = payload?.series_set?.title ?? payload?.user_viz?.kind ?? vizId;
    header.append(el("span", "panel-title", title));
    if (payload?.series_set) header.append(this.renderTypePicker(viz.viz_id, viz.viz_type));
    panel.append(header);

    const body = el("div", "panel-body");
    const error = this.renderErrors.get(vizId);
    if (error) {
      body.append(el("div", "render-error", `could not render: ${error}`));
    } else if (!payload) {
      body.append(el("div", "render-error", "payload not loaded"));
    } else {
      try {
        body.innerHTML = renderViz(payload).html;
      } catch (err) {
        body.textContent = "";
        body.append(
          el("div", "render-error", `could not render: ${err instanceof Error ? err.message : err}`),
        );
      }
    }
    panel.append(body);

    if (payload?.legend) {
      const legendBox = el("div", "legend-scroll");
      legendBox.setAttribute("data-legend-for", vizId);
      legendBox.innerHTML = renderLegend(vizId, payload.legend);
      panel.append(legendBox);
    }
    if (payload?.dimensions?.length) panel.append(this.renderDimensionPickers(vizId, payload));
    if (payload?.selection) panel.append(this.renderRangeControls(vizId, payload));
    return panel;
  }

  private renderTypePicker(vizId: string, current: VizType): HTMLElement {
    const select = el("select", "type-picker") as HTMLSelectElement;
    select.setAttribute("data-type-for", vizId);
    for (const t of STAT_TYPES) {
      const opt = document.createElement("option");
      opt.value = t;
      opt.textContent = t;
      opt.selected = t === current;
      select.append(opt);
    }
    return select;
  }

  private renderDimensionPickers(vizId: string, payload: VizPayloadWire): HTMLElement {
    const wrap = el("div", "dimension-pickers");
    for (const dim of payload.dimensions ?? []) {
      const label = el("label", "dim-label", `${dim.name}: `);
      const select = el("select", "dim-picker") as HTMLSelectElement;
      select.setAttribute("data-dim-for", vizId);
      select.setAttribute("data-dim-name", dim.name);
      for (const member of dim.members) {
        const opt = document.createElement("option");
        opt.value = member.code;
        opt.textContent = member.label;
        opt.selected = member.code === dim.chosen;
        select.append(opt);
      }
      label.append(select);
      wrap.append(label);
    }
    return wrap;
  }

  private renderRangeControls(vizId: string, payload: VizPayloadWire): HTMLElement {
    const wrap = el("div", "range-controls");
    const from = el("input", "range-from") as HTMLInputElement;
    from.value = payload.selection?.from ?? "";
    from.setAttribute("data-range", "from");
    const to = el("input", "range-to") as HTMLInputElement;
    to.value = payload.selection?.to ?? "";
    to.setAttribute("data-range", "to");
    const apply = el("button", "range-apply", "apply range");
    apply.setAttribute("data-action", "apply-range");
    apply.setAttribute("data-range-for", vizId);
    wrap.append(from, el("span", "range-sep", "to"), to, apply);
    return wrap;
  }

  private restoreLegendScroll(): void {
    if (!this.state) return;
    for (const [vizId, top] of Object.entries(this.state.legendScroll)) {
      const box = this.root.querySelector(`[data-legend-for="${vizId}"]`);
      if (box instanceof HTMLElement) box.scrollTop = top;
    }
  }

  // ----------------------------------------------------------------- hovers

  private clearPopups(): void {
    for (const p of this.popups) p.remove();
    this.popups = [];
    for (const node of this.root.querySelectorAll(".hl")) node.classList.remove("hl");
  }

  private applyHighlights(): void {
    this.clearPopups();
    const highlights = this.state?.highlights;
    if (!highlights) return;
    const mark = (item: HighlightItemWire, anchor: boolean) => {
      const node = this.root.querySelector(
        `[data-viz-id="${item.viz_id}"][data-local-id="${CSS.escape(item.local_id)}"]`,
      );
      if (!node) return;
      node.classList.add("hl");
      const rect = node.getBoundingClientRect();
      const popup = el("div", anchor ? "popup anchor" : "popup", item.display_value);
      popup.style.left = `${rect.left + rect.width / 2 + window.scrollX}px`;
      popup.style.top = `${rect.top - 8 + window.scrollY}px`;
      document.body.append(popup);
      this.popups.push(popup);
    };
    mark(highlights.anchor, true);
    for (const item of highlights.items) mark(item, false);
  }

  private onHover(ref: ItemRefWire | null): void {
    if (!this.state) return;
    try {
      this.state = ref ? hoverDispatch(this.state, ref) : clearHover(this.state);
    } catch {
      this.state = clearHover(this.state);
    }
    this.applyHighlights();
  }

  // ------------------------------------------------------------------ events

  private wireEvents(): void {
    this.root.addEventListener("mouseover", (ev) => {
      if (this.linkMode) return;
      const ref = itemRefOf(ev.target as Element);
      if (ref) this.onHover(ref);
    });
    this.root.addEventListener("mouseout", (ev) => {
      if (itemRefOf(ev.target as Element)) this.onHover(null);
    });
    this.root.addEventListener("click", (ev) => void this.onClick(ev));
    this.root.addEventListener("change", (ev) => void this.onChange(ev));
    this.root.addEventListener(
      "scroll",
      (ev) => {
        const box = ev.target;
        if (box instanceof HTMLElement && box.hasAttribute("data-legend-for") && this.state) {
          this.state = setLegendScroll(
            this.state,
            box.getAttribute("data-legend-for")!,
            box.scrollTop,
          );
        }
      },
      true,
    );
    this.root.addEventListener("pointerdown", (ev) => this.onPointerDown(ev));
    this.root.addEventListener("pointerup", (ev) => void this.onPointerUp(ev));
    this.root.addEventListener("wheel", (ev) => this.onWheel(ev), { passive: false });
    this.root.addEventListener("pointermove", (ev) => this.onPanMove(ev));
  }

  private async onClick(ev: MouseEvent): Promise<void> {
    const target = ev.target as Element;
    const action = target.closest("[data-action]")?.getAttribute("data-action");
    if (action === "open-dialog") return this.openDialog();
    if (action === "close-dialog") {
      this.dialog = null;
      return this.render();
    }
    if (action === "toggle-mapping") {
      this.linkMode = !this.linkMode;
      this.mapping = this.linkMode ? startMapping() : cancelMapping();
      this.notice = "";
      return this.render();
    }
    if (action === "delete-rule") {
      const index = Number(target.getAttribute("data-rule-index"));
      const rule = this.state?.dashboard.manual_rules[index];
      if (!rule) return;
      await this.mutate((revision) =>
        this.api.deleteRule(
          this.dashboardId,
          { viz_id: rule.from.viz_id, local_id: rule.from.local_id },
          { viz_id: rule.to.viz_id, local_id: rule.to.local_id },
          revision,
        ),
      );
      return;
    }
    if (action === "apply-range") {
      const vizId = target.getAttribute("data-range-for")!;
      const panel = target.closest(".panel")!;
      const from = (panel.querySelector('[data-range="from"]') as HTMLInputElement).value;
      const to = (panel.querySelector('[data-range="to"]') as HTMLInputElement).value;
      await this.mutate(
        (revision) => this.api.updateVisualization(this.dashboardId, vizId, { from, to }, revision),
        [vizId],
      );
      return;
    }

    const legendBtn = target.closest(".legend-entry");
    if (legendBtn) return this.onLegendClick(legendBtn);

    if (this.linkMode) {
      const ref = itemRefOf(target);
      if (ref) {
        const result = clickItem(this.mapping, ref);
        this.mapping = result.state;
        if (result.request) await this.postRule(result.request.from, result.request.to);
        else this.render();
      }
    }
  }

  private async onLegendClick(button: Element): Promise<void> {
    const vizId = button.getAttribute("data-viz-id")!;
    const code = button.getAttribute("data-legend-code")!;
    const payload = this.payloads.get(vizId);
    if (!payload?.legend || !payload.selection || !this.state) return;
    const body = legendToggleBody(
      payload.legend,
      payload.selection,
      code,
      this.state.dashboard.revision,
    );
    await this.mutate(
      (revision) =>
        this.api.updateVisualization(this.dashboardId, vizId, { areas: body.areas }, revision),
      [vizId],
    );
  }

  private async postRule(from: RuleEndpointSpec, to: RuleEndpointSpec): Promise<void> {
    const ok = await this.mutate((revision) =>
      this.api.addRule(this.dashboardId, from, to, revision),
    );
    if (ok) {
      this.notice = "link created";
      this.linkMode = false;
      this.mapping = cancelMapping();
      this.render();
    }
  }

  private async onChange(ev: Event): Promise<void> {
    const target = ev.target;
    if (!(target instanceof HTMLSelectElement)) return;
    const typeFor = target.getAttribute("data-type-for");
    if (typeFor) {
      await this.mutate(
        (revision) =>
          this.api.updateVisualization(
            this.dashboardId,
            typeFor,
            { viz_type: target.value as VizType },
            revision,
          ),
        [typeFor],
      );
      return;
    }
    const dimFor = target.getAttribute("data-dim-for");
    if (dimFor) {
      const name = target.getAttribute("data-dim-name")!;
      await this.mutate(
        (revision) =>
          this.api.updateVisualization(
            this.dashboardId,
            dimFor,
            { dimension_choice: { [name]: target.value } },
            revision,
          ),
        [dimFor],
      );
    }
  }

  // ------------------------------------------- drag-to-span mapping + panning

  private svgViewX(svg: SVGSVGElement, clientX: number): number {
    const rect = svg.getBoundingClientRect();
    return ((clientX - rect.left) / rect.width) * PLOT.width;
  }

  private onPointerDown(ev: PointerEvent): void {
    const target = ev.target as Element;
    const svg = target.closest("svg");
    if (!svg) return;
    if (svg.hasAttribute("data-pan-zoom")) {
      this.panFrom = { vizId: svg.getAttribute("data-viz-id")!, x: ev.clientX, y: ev.clientY };
      return;
    }
    if (this.mapping.phase !== "armed") return;
    const vizId = svg.getAttribute("data-viz-id");
    if (!vizId || !this.payloads.get(vizId)?.series_set) return;
    this.dragStart = {
      vizId,
      viewX: this.svgViewX(svg as SVGSVGElement, ev.clientX),
      x: ev.clientX,
      y: ev.clientY,
    };
  }

  private async onPointerUp(ev: PointerEvent): Promise<void> {
    this.panFrom = null;
    const start = this.dragStart;
    this.dragStart = null;
    if (!start || this.mapping.phase !== "armed") return;
    const moved = Math.abs(ev.clientX - start.x);
    if (moved < 8) return; // a plain click: the click handler takes it
    const svg = (ev.target as Element).closest("svg");
    if (!svg || svg.getAttribute("data-viz-id") !== start.vizId) return;
    const times = this.payloads.get(start.vizId)?.series_set?.times ?? [];
    if (times.length === 0) return;
    const endX = this.svgViewX(svg as SVGSVGElement, ev.clientX);
    const i0 = timeIndexForX(times.length, Math.min(start.viewX, endX));
    const i1 = timeIndexForX(times.length, Math.max(start.viewX, endX));
    const result = dragRegion(this.mapping, start.vizId, times[i0]!, times[i1]!);
    this.mapping = result.state;
    if (result.request) await this.postRule(result.request.from, result.request.to);
    else this.render();
  }

  private panFrom: { vizId: string; x: number; y: number } | null = null;

  private viewBoxOf(svg: SVGSVGElement): ViewBox {
    const vizId = svg.getAttribute("data-viz-id")!;
    let box = this.mapViews.get(vizId);
    if (!box) {
      box = { x: 0, y: 0, w: PLOT.width, h: PLOT.height };
      this.mapViews.set(vizId, box);
    }
    return box;
  }

  private applyViewBox(svg: SVGSVGElement, box: ViewBox): void {
    svg.setAttribute("viewBox", `${box.x} ${box.y} ${box.w} ${box.h}`);
  }

  private onPanMove(ev: PointerEvent): void {
    if (!this.panFrom) return;
    const svg = this.root.querySelector(
      `svg[data-pan-zoom][data-viz-id="${this.panFrom.vizId}"]`,
    ) as SVGSVGElement | null;
    if (!svg) return;
    const box = this.viewBoxOf(svg);
    const rect = svg.getBoundingClientRect();
    box.x -= ((ev.clientX - this.panFrom.x) / rect.width) * box.w;
    box.y -= ((ev.clientY - this.panFrom.y) / rect.height) * box.h;
    this.panFrom = { ...this.panFrom, x: ev.clientX, y: ev.clientY };
    this.applyViewBox(svg, box);
  }

  private onWheel(ev: WheelEvent): void {
    const svg = (ev.target as Element).closest("svg[data-pan-zoom]") as SVGSVGElement | null;
    if (!svg) return;
    ev.preventDefault();
    const box = this.viewBoxOf(svg);
    const factor = ev.deltaY < 0 ? 1 / 1.2 : 1.2;
    const rect = svg.getBoundingClientRect();
    const fx = (ev.clientX - rect.left) / rect.width;
    const fy = (ev.clientY - rect.top) / rect.height;
    const newW = Math.min(PLOT.width * 8, Math.max(PLOT.width / 16, box.w * factor));
    const newH = newW * (PLOT.height / PLOT.width);
    box.x += (box.w - newW) * fx;
    box.y += (box.h - newH) * fy;
    box.w = newW;
    box.h = newH;
    this.applyViewBox(svg, box);
  }

  // ------------------------------------------------------------------ dialog

  private async openDialog(): Promise<void> {
    const entries = await this.api.listDatasets();
    const providers = [...new Set(entries.map((e) => e.provider))].sort();
    this.dialog = this.buildDialog(entries, providers, providers[0] ?? "", "");
    this.render();
  }

  private buildDialog(
    entries: CatalogEntryWire[],
    providers: string[],
    activeProvider: string,
    query: string,
  ): HTMLElement {
    const overlay = el("div", "dialog-overlay");
    const dialog = el("div", "dialog");
    const head = el("div", "dialog-head");
    head.append(el("span", "dialog-title", "Add visualization"));
    const close = el("button", "dialog-close", "×");
    close.setAttribute("data-action", "close-dialog");
    head.append(close);
    dialog.append(head);

    const tabs = el("div", "provider-tabs");
    for (const provider of [...providers, "your content"]) {
      const tab = el(
        "button",
        provider === activeProvider ? "tab active" : "tab",
        provider,
      );
      tab.addEventListener("click", () => {
        this.dialog = this.buildDialog(entries, providers, provider, query);
        this.render();
      });
      tabs.append(tab);
    }
    dialog.append(tabs);

    if (activeProvider === "your content") {
      dialog.append(this.buildUserContentForm());
    } else {
      const search = el("input", "dataset-search") as HTMLInputElement;
      search.setAttribute("placeholder", "search datasets");
      search.value = query;
      search.addEventListener("change", () => {
        void this.api.listDatasets(search.value, activeProvider).then((found) => {
          this.dialog = this.buildDialog(
            found.length || search.value ? mergeEntries(entries, found) : entries,
            providers,
            activeProvider,
            search.value,
          );
          this.render();
        });
      });
      dialog.append(search);
      const list = el("div", "dataset-list");
      const q = query.toLowerCase();
      for (const entry of entries) {
        if (entry.provider !== activeProvider) continue;
        if (q && !entry.title.toLowerCase().includes(q)) continue;
        const row = el("div", "dataset-row");
        row.append(
          el("span", "dataset-title", entry.title),
          el("span", "dataset-meta", `${entry.granularity}, ${entry.area_count} areas`),
        );
        const add = el("button", "dataset-add", "Add");
        add.addEventListener("click", () => void this.addCube(entry.cube_id));
        row.append(add);
        list.append(row);
      }
      dialog.append(list);
    }
    overlay.append(dialog);
    return overlay;
  }

  private buildUserContentForm(): HTMLElement {
    const form = el("div", "user-content-form");
    const kind = el("select", "user-kind") as HTMLSelectElement;
    for (const k of ["timeline", "map", "chart"]) {
      const opt = document.createElement("option");
      opt.value = k;
      opt.textContent = k;
      kind.append(opt);
    }
    const items = el("textarea", "user-items") as HTMLTextAreaElement;
    items.value = JSON.stringify(
      [{ title: "Early 1990s recession", start: "1990", end: "1992", details: "" }],
      null,
      2,
    );
    items.rows = 8;
    const submit = el("button", "user-submit", "Add");
    submit.addEventListener("click", () => void this.addUserViz(kind.value, items.value));
    form.append(kind, items, submit);
    return form;
  }

  private async addCube(cubeId: string): Promise<void> {
    this.dialog = null;
    await this.mutate((revision) =>
      this.api.addVisualization(this.dashboardId, { cube_id: cubeId }, revision),
    );
  }

  private async addUserViz(kind: string, itemsJson: string): Promise<void> {
    let items: unknown;
    try {
      items = JSON.parse(itemsJson);
    } catch (err) {
      this.notice = `items are not valid JSON: ${err instanceof Error ? err.message : err}`;
      return this.render();
    }
    try {
      const userViz = await this.api.createUserViz(kind as UserVizKind, items as object[]);
      this.dialog = null;
      await this.mutate((revision) =>
        this.api.addVisualization(this.dashboardId, { user_viz_id: userViz.user_viz_id }, revision),
      );
    } catch (err) {
      this.notice = err instanceof ApiError ? `${err.errorName}: ${err.detail}` : String(err);
      this.render();
    }
  }
}

function mergeEntries(
  base: CatalogEntryWire[],
  extra: CatalogEntryWire[],
): CatalogEntryWire[] {
  const seen = new Map(base.map((e) => [e.cube_id, e]));
  for (const e of extra) seen.set(e.cube_id, e);
  return [...seen.values()];
}
