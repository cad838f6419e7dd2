/**
 * Browser entry point: wires the REST client, canvas state, editor,
 * review controls, magic tool, dashboard, and keyboard map to the DOM.
 * All geometry and statistics logic lives in the imported modules; this
 * file is event plumbing and drawing.
 */

import { ApiClient } from "./api.js";
import { CanvasState } from "./canvasState.js";
import { buildDashboard, type DashboardModel } from "./dashboard.js";
import { AnnotationEditor, POLYGON_CLOSE_RADIUS_PX } from "./editor.js";
import { actionForKey, helpOverlayLines, isEditableTarget, type ShortcutAction } from "./keyboard.js";
import { MagicTool } from "./magic.js";
import { passesConfidenceFilter, ReviewController } from "./review.js";
import {
  fitToView,
  imageToScreen,
  screenToImage,
  zoomAround,
  type Point,
} from "./transform.js";
import type {
  AnnotationsPayload,
  ImageInfo,
  LocalAnnotation,
  ProjectInfo,
  ToolName,
} from "./types.js";
import { fromRecord } from "./types.js";

const byId = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
};

const TOOLS: { tool: ToolName; label: string }[] = [
  { tool: "select", label: "select" },
  { tool: "rectangle", label: "rect" },
  { tool: "polygon", label: "poly" },
  { tool: "obb", label: "obb" },
  { tool: "magic", label: "magic" },
];

const STATUS_COLORS: Record<string, string> = {
  unannotated: "#8a919c",
  pending_review: "#e0b35c",
  annotated: "#6fbf73",
  failed: "#e06c5c",
};

type DragKind = "none" | "pan" | "draw" | "move" | "resize" | "rotate";

class App {
  private readonly api = new ApiClient();
  private readonly state = new CanvasState();
  private project: ProjectInfo | null = null;
  private images: ImageInfo[] = [];
  private currentIndex = -1;
  private editor: AnnotationEditor | null = null;
  private review: ReviewController | null = null;
  private magic: MagicTool | null = null;
  private bitmap: ImageBitmap | null = null;

  private drag: DragKind = "none";
  private dragLast: Point = { x: 0, y: 0 };
  private dragMoved = false;
  private resizeCorner: "nw" | "ne" | "sw" | "se" = "se";

  private readonly canvas = byId<HTMLCanvasElement>("canvas");
  private readonly slider = byId<HTMLInputElement>("confidence-slider");

  init(): void {
    this.bindLogin();
    this.bindToolbar();
    this.bindCanvas();
    this.bindKeyboard();
    this.bindHelp();
    byId("btn-back").addEventListener("click", () => this.showProjects());
    byId("btn-dashboard").addEventListener("click", () => void this.showDashboard());
    byId("btn-dashboard-back").addEventListener("click", () => this.showView("workspace-view"));
    byId("btn-refetch").addEventListener("click", () => void this.refetchCurrent());
    window.addEventListener("resize", () => this.draw());
  }

  // -- navigation ----------------------------------------------------------

  private showView(id: string): void {
    for (const view of ["login-view", "projects-view", "workspace-view", "dashboard-view"]) {
      byId(view).hidden = view !== id;
    }
    byId("btn-dashboard").hidden = id === "login-view" || id === "projects-view";
  }

  private bindLogin(): void {
    const form = byId<HTMLFormElement>("login-form");
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const username = byId<HTMLInputElement>("login-username").value;
      const password = byId<HTMLInputElement>("login-password").value;
      this.api.login(username, password).then(
        () => void this.showProjects(),
        (err: unknown) => {
          byId("login-error").textContent = err instanceof Error ? err.message : String(err);
        },
      );
    });
  }

  private showProjects(): void {
    this.showView("projects-view");
    void this.api.listProjects().then((page) => {
      const list = byId("project-list");
      list.textContent = "";
      for (const project of page.items) {
        const li = document.createElement("li");
        const name = document.createElement("span");
        name.textContent = project.name;
        const meta = document.createElement("span");
        meta.className = "meta";
        meta.textContent = `${project.mode}, ${project.image_count} images`;
        li.append(name, meta);
        li.addEventListener("click", () => void this.openProject(project.id));
        list.append(li);
      }
      if (page.items.length === 0) {
        const li = document.createElement("li");
        li.textContent = "no projects yet, create one with the CLI";
        list.append(li);
      }
    });
  }

  private async openProject(projectId: number): Promise<void> {
    this.project = await this.api.getProject(projectId);
    this.review = new ReviewController(this.api, projectId, window.localStorage);
    this.magic = new MagicTool(this.api, this.state);
    this.slider.value = String(this.review.minConfidence);
    byId("slider-value").textContent = this.review.minConfidence.toFixed(2);
    byId("project-title").textContent = this.project.name;
    this.fillClassPicker();
    const page = await this.api.listImages(projectId, { limit: 500 });
    this.images = page.items;
    this.showView("workspace-view");
    this.renderImageList();
    if (this.images.length > 0) await this.loadImage(0);
    else this.setStatus("no images in this project");
  }

  private fillClassPicker(): void {
    const picker = byId<HTMLSelectElement>("class-picker");
    picker.textContent = "";
    for (const cls of this.project?.classes ?? []) {
      const option = document.createElement("option");
      option.value = String(cls.id);
      option.textContent = cls.name;
      picker.append(option);
    }
  }

  private currentClassId(): number {
    const picker = byId<HTMLSelectElement>("class-picker");
    const id = Number(picker.value);
    return Number.isFinite(id) ? id : (this.project?.classes[0]?.id ?? 0);
  }

  private renderImageList(): void {
    const list = byId("image-list");
    list.textContent = "";
    this.images.forEach((image, index) => {
      const li = document.createElement("li");
      if (index === this.currentIndex) li.classList.add("current");
      const name = document.createElement("span");
      name.textContent = image.name;
      const status = document.createElement("span");
      status.className = `status ${image.status}`;
      status.textContent = image.status;
      li.append(name, status);
      li.addEventListener("click", () => void this.loadImage(index));
      list.append(li);
    });
    byId("image-counter").textContent =
      this.currentIndex >= 0 ? `${this.currentIndex + 1} / ${this.images.length}` : `${this.images.length}`;
  }

  private async loadImage(index: number): Promise<void> {
    const image = this.images[index];
    const review = this.review;
    if (image === undefined || review === null || this.project === null) return;
    this.currentIndex = index;
    await review.load(image.id);
    const payload: AnnotationsPayload = { image: review.image ?? image, items: review.items };
    this.adoptPayload(payload, { resetView: true });
    const blob = await this.api.fetchImageBlob(image.id);
    this.bitmap = await createImageBitmap(blob);
    this.draw();
    this.renderImageList();
  }

  /** Sync the canvas working list and sidebar from a server payload. */
  private adoptPayload(payload: AnnotationsPayload, options: { resetView?: boolean } = {}): void {
    const locals = payload.items.map((record, i) => fromRecord(record, i + 1));
    this.state.loadImage(payload.image, locals);
    if (options.resetView) this.resetView();
    this.editor = new AnnotationEditor(this.state, this.api, {
      mode: this.project?.mode ?? "detection",
      classIds: new Set((this.project?.classes ?? []).map((c) => c.id)),
    });
    this.editor.markAcknowledged();
    this.updateImageRecord(payload.image);
    this.setStatus(`${payload.image.name}: ${payload.items.length} annotations, ${payload.image.status}`);
    this.draw();
  }

  private updateImageRecord(image: ImageInfo): void {
    const index = this.images.findIndex((img) => img.id === image.id);
    if (index >= 0) this.images[index] = image;
    this.renderImageList();
  }

  private resetView(): void {
    const image = this.state.image;
    if (image === null) return;
    const rect = this.canvas.parentElement?.getBoundingClientRect();
    this.state.setView(
      fitToView(image.width, image.height, rect?.width ?? 800, rect?.height ?? 600),
    );
  }

  private async refetchCurrent(): Promise<void> {
    byId("conflict-bar").hidden = true;
    if (this.currentIndex >= 0) await this.loadImage(this.currentIndex);
  }

  // -- toolbar -------------------------------------------------------------

  private bindToolbar(): void {
    const holder = byId("tool-buttons");
    for (const { tool, label } of TOOLS) {
      const button = document.createElement("button");
      button.textContent = label;
      button.dataset["tool"] = tool;
      button.addEventListener("click", () => this.setTool(tool));
      holder.append(button);
    }
    this.highlightTool();
    byId("btn-save").addEventListener("click", () => void this.saveNow());
    byId("btn-undo").addEventListener("click", () => this.dispatch("undo"));
    byId("btn-delete").addEventListener("click", () => this.dispatch("delete"));
    byId("btn-duplicate").addEventListener("click", () => this.dispatch("duplicate"));
    byId("btn-accept-all").addEventListener("click", () => void this.acceptAll());
    this.slider.addEventListener("input", () => {
      const value = Number(this.slider.value);
      this.review?.setMinConfidence(value);
      byId("slider-value").textContent = value.toFixed(2);
      this.draw();
    });
  }

  private setTool(tool: ToolName): void {
    this.state.setTool(tool);
    this.editor?.cancelPolygon();
    this.highlightTool();
    this.draw();
  }

  private highlightTool(): void {
    for (const button of byId("tool-buttons").querySelectorAll("button")) {
      button.classList.toggle("active", button.dataset["tool"] === this.state.tool);
    }
  }

  private async saveNow(): Promise<void> {
    const editor = this.editor;
    if (editor === null) return;
    const result = await editor.save();
    if (result.ok) {
      this.review?.adopt(result.payload);
      this.updateImageRecord(result.image);
      this.setStatus(`saved, image ${result.image.status}`);
    } else if (result.kind === "conflict") {
      byId("conflict-bar").hidden = false;
    } else {
      this.toast(result.message, true);
    }
    this.draw();
  }

  private async acceptAll(): Promise<void> {
    const review = this.review;
    if (review === null) return;
    const outcome = await review.acceptAll();
    if (outcome.ok) {
      this.adoptPayload({ image: outcome.image, items: review.items });
      this.toast("all pending annotations accepted", false);
    } else if (outcome.conflict) {
      byId("conflict-bar").hidden = false;
    } else {
      this.toast(outcome.message, true);
    }
  }

  // -- keyboard ------------------------------------------------------------

  private bindKeyboard(): void {
    window.addEventListener("keydown", (event) => {
      if (isEditableTarget(event.target)) return;
      if (event.key === "Escape") {
        this.editor?.cancelPolygon();
        byId("help-overlay").hidden = true;
        this.draw();
        return;
      }
      if (event.key === "Enter" && this.state.tool === "polygon") {
        event.preventDefault();
        const closed = this.editor?.closePolygon(this.currentClassId());
        if (closed != null) void this.saveNow();
        return;
      }
      const action = actionForKey(event.key, {
        ctrl: event.ctrlKey,
        meta: event.metaKey,
        alt: event.altKey,
      });
      if (action === null) return;
      event.preventDefault();
      this.dispatch(action);
    });
  }

  private dispatch(action: ShortcutAction): void {
    switch (action) {
      case "next-image":
        if (this.currentIndex + 1 < this.images.length) void this.loadImage(this.currentIndex + 1);
        break;
      case "prev-image":
        if (this.currentIndex > 0) void this.loadImage(this.currentIndex - 1);
        break;
      case "tool-select":
        this.setTool("select");
        break;
      case "tool-rectangle":
        this.setTool("rectangle");
        break;
      case "tool-polygon":
        this.setTool("polygon");
        break;
      case "tool-obb":
        this.setTool("obb");
        break;
      case "tool-magic":
        this.setTool("magic");
        break;
      case "save":
        void this.saveNow();
        break;
      case "undo":
        if (this.editor?.undo() === true) {
          this.setStatus("undone, save to persist");
          this.draw();
        }
        break;
      case "delete":
        if (this.editor?.deleteSelected() === true) void this.saveNow();
        break;
      case "duplicate":
        if (this.editor?.duplicateSelected() != null) void this.saveNow();
        else if (this.state.selected !== null) this.toast("no room for a copy here", true);
        break;
      case "toggle-help": {
        const overlay = byId("help-overlay");
        overlay.hidden = !overlay.hidden;
        break;
      }
    }
  }

  private bindHelp(): void {
    byId("help-lines").textContent = helpOverlayLines().join("\n");
    byId("btn-help").addEventListener("click", () => this.dispatch("toggle-help"));
    byId("btn-help-close").addEventListener("click", () => this.dispatch("toggle-help"));
  }

  // -- canvas input --------------------------------------------------------

  private bindCanvas(): void {
    this.canvas.addEventListener("pointerdown", (event) => this.onPointerDown(event));
    this.canvas.addEventListener("pointermove", (event) => this.onPointerMove(event));
    this.canvas.addEventListener("pointerup", (event) => this.onPointerUp(event));
    this.canvas.addEventListener("dblclick", () => {
      if (this.state.tool === "polygon") {
        const closed = this.editor?.closePolygon(this.currentClassId());
        if (closed != null) void this.saveNow();
      }
    });
    this.canvas.addEventListener("wheel", (event) => {
      event.preventDefault();
      const pt = this.eventPoint(event);
      const factor = Math.pow(1.0015, -event.deltaY);
      this.state.setView(zoomAround(this.state.view, this.state.view.zoom * factor, pt));
      this.draw();
    }, { passive: false });
  }

  private eventPoint(event: MouseEvent): Point {
    const rect = this.canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  private onPointerDown(event: PointerEvent): void {
    if (this.editor === null || this.state.image === null) return;
    this.canvas.setPointerCapture(event.pointerId);
    const pt = this.eventPoint(event);
    this.dragLast = pt;
    this.dragMoved = false;
    if (event.button === 1 || event.shiftKey) {
      this.drag = "pan";
      return;
    }
    switch (this.state.tool) {
      case "rectangle":
      case "obb":
        this.editor.beginRectangle(pt);
        this.drag = "draw";
        break;
      case "polygon": {
        const result = this.editor.addPolygonVertex(pt, this.currentClassId());
        if (result === "closed") void this.saveNow();
        this.draw();
        break;
      }
      case "magic":
        void this.magicClick(pt);
        break;
      case "select":
        this.beginSelectDrag(pt);
        break;
    }
  }

  private beginSelectDrag(pt: Point): void {
    const editor = this.editor;
    if (editor === null) return;
    const selected = this.state.selected;
    if (selected !== null && selected.kind === "bbox") {
      const corner = this.cornerAt(selected, pt);
      if (corner !== null) {
        this.resizeCorner = corner;
        editor.beginTransform();
        this.drag = "resize";
        return;
      }
    }
    if (selected !== null && selected.kind === "obb" && this.onRotationHandle(selected, pt)) {
      editor.beginTransform();
      this.drag = "rotate";
      return;
    }
    const hit = this.hitTest(pt);
    if (hit !== null) {
      this.state.select(hit.localId);
      editor.beginTransform();
      this.drag = "move";
    } else {
      this.state.select(null);
      this.drag = "pan";
    }
    this.draw();
  }

  private onPointerMove(event: PointerEvent): void {
    if (this.drag === "none") {
      if (this.state.tool === "polygon") this.draw();
      return;
    }
    const pt = this.eventPoint(event);
    const dx = pt.x - this.dragLast.x;
    const dy = pt.y - this.dragLast.y;
    if (Math.abs(dx) + Math.abs(dy) > 0) this.dragMoved = true;
    switch (this.drag) {
      case "pan":
        this.state.panBy(dx, dy);
        break;
      case "draw":
        this.editor?.dragRectangle(pt);
        break;
      case "move":
        this.editor?.moveSelected(dx, dy);
        break;
      case "resize":
        this.editor?.resizeSelectedCorner(this.resizeCorner, pt);
        break;
      case "rotate": {
        const selected = this.state.selected;
        if (selected !== null) {
          const [cx = 0, cy = 0] = selected.coords;
          const center = imageToScreen(this.state.view, { x: cx, y: cy });
          const before = Math.atan2(this.dragLast.y - center.y, this.dragLast.x - center.x);
          const after = Math.atan2(pt.y - center.y, pt.x - center.x);
          this.editor?.rotateSelected(after - before);
        }
        break;
      }
    }
    this.dragLast = pt;
    this.draw();
  }

  private onPointerUp(event: PointerEvent): void {
    const wasDrag = this.drag;
    this.drag = "none";
    if (wasDrag === "draw") {
      const committed = this.editor?.commitRectangle(this.currentClassId());
      if (committed != null) void this.saveNow();
      this.draw();
    } else if ((wasDrag === "move" || wasDrag === "resize" || wasDrag === "rotate") && this.dragMoved) {
      void this.saveNow();
    } else if ((wasDrag === "move" || wasDrag === "resize" || wasDrag === "rotate") && !this.dragMoved) {
      // a plain click: the snapshot taken for the drag is not needed
      this.state.undo();
      this.draw();
    }
  }

  private async magicClick(pt: Point): Promise<void> {
    const magic = this.magic;
    if (magic === null) return;
    const outcome = await magic.clickAt(pt, this.currentClassId());
    if (outcome.ok) {
      await this.saveNow();
    } else {
      this.toast(outcome.message, true);
    }
  }

  // -- hit testing ---------------------------------------------------------

  private hitTest(screenPt: Point): LocalAnnotation | null {
    const pt = screenToImage(this.state.view, screenPt);
    const items = this.visibleAnnotations();
    for (let i = items.length - 1; i >= 0; i -= 1) {
      const ann = items[i];
      if (ann !== undefined && this.contains(ann, pt)) return ann;
    }
    return null;
  }

  private contains(ann: LocalAnnotation, pt: Point): boolean {
    if (ann.kind === "bbox") {
      const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
      return pt.x >= x1 && pt.x <= x2 && pt.y >= y1 && pt.y <= y2;
    }
    if (ann.kind === "obb") {
      const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = ann.coords;
      const c = Math.cos(-theta);
      const s = Math.sin(-theta);
      const lx = (pt.x - cx) * c - (pt.y - cy) * s;
      const ly = (pt.x - cx) * s + (pt.y - cy) * c;
      return Math.abs(lx) <= w / 2 && Math.abs(ly) <= h / 2;
    }
    let inside = false;
    const n = ann.coords.length / 2;
    for (let i = 0, j = n - 1; i < n; j = i, i += 1) {
      const xi = ann.coords[2 * i] ?? 0;
      const yi = ann.coords[2 * i + 1] ?? 0;
      const xj = ann.coords[2 * j] ?? 0;
      const yj = ann.coords[2 * j + 1] ?? 0;
      if (yi > pt.y !== yj > pt.y && pt.x < ((xj - xi) * (pt.y - yi)) / (yj - yi) + xi) {
        inside = !inside;
      }
    }
    return inside;
  }

  private cornerAt(ann: LocalAnnotation, screenPt: Point): "nw" | "ne" | "sw" | "se" | null {
    const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
    const corners: ["nw" | "ne" | "sw" | "se", Point][] = [
      ["nw", { x: x1, y: y1 }],
      ["ne", { x: x2, y: y1 }],
      ["sw", { x: x1, y: y2 }],
      ["se", { x: x2, y: y2 }],
    ];
    for (const [name, corner] of corners) {
      const s = imageToScreen(this.state.view, corner);
      if (Math.hypot(s.x - screenPt.x, s.y - screenPt.y) <= 7) return name;
    }
    return null;
  }

  private onRotationHandle(ann: LocalAnnotation, screenPt: Point): boolean {
    const handle = this.rotationHandlePoint(ann);
    return Math.hypot(handle.x - screenPt.x, handle.y - screenPt.y) <= 8;
  }

  private rotationHandlePoint(ann: LocalAnnotation): Point {
    const [cx = 0, cy = 0, , h = 0, theta = 0] = ann.coords;
    const offset = h / 2 + 24 / this.state.view.zoom;
    const hx = cx + offset * Math.sin(theta);
    const hy = cy - offset * Math.cos(theta);
    return imageToScreen(this.state.view, { x: hx, y: hy });
  }

  // -- drawing -------------------------------------------------------------

  private visibleAnnotations(): LocalAnnotation[] {
    const threshold = this.review?.minConfidence ?? 0;
    return this.state.annotations.filter((ann) =>
      passesConfidenceFilter(ann.state, ann.verifiedScore, threshold),
    );
  }

  private classColor(classId: number): string {
    return this.project?.classes.find((c) => c.id === classId)?.display_color ?? "#4f9cf0";
  }

  private draw(): void {
    const wrap = this.canvas.parentElement;
    if (wrap === null) return;
    const rect = wrap.getBoundingClientRect();
    const dpr = window.devicePixelRatio || 1;
    if (this.canvas.width !== Math.round(rect.width * dpr)) {
      this.canvas.width = Math.round(rect.width * dpr);
      this.canvas.height = Math.round(rect.height * dpr);
    }
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) return;
    ctx.setTransform(dpr, 0, 0, dpr, 0, 0);
    ctx.clearRect(0, 0, rect.width, rect.height);
    const view = this.state.view;
    if (this.bitmap !== null) {
      ctx.save();
      ctx.imageSmoothingEnabled = view.zoom < 3;
      ctx.transform(view.zoom, 0, 0, view.zoom, view.panX, view.panY);
      ctx.drawImage(this.bitmap, 0, 0);
      ctx.restore();
    }
    for (const ann of this.visibleAnnotations()) {
      this.drawAnnotation(ctx, ann);
    }
    this.drawPolygonInProgress(ctx);
  }

  private drawAnnotation(ctx: CanvasRenderingContext2D, ann: LocalAnnotation): void {
    const selected = ann.localId === this.state.selectedId;
    const color = this.classColor(ann.classId);
    ctx.save();
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.lineWidth = selected ? 2.5 : 1.5;
    ctx.setLineDash(ann.state === "pending" ? [6, 4] : []);
    const view = this.state.view;
    if (ann.kind === "bbox") {
      const [x1 = 0, y1 = 0, x2 = 0, y2 = 0] = ann.coords;
      const a = imageToScreen(view, { x: x1, y: y1 });
      const b = imageToScreen(view, { x: x2, y: y2 });
      ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
      if (selected) {
        for (const corner of [a, { x: b.x, y: a.y }, { x: a.x, y: b.y }, b]) {
          ctx.fillRect(corner.x - 3, corner.y - 3, 6, 6);
        }
      }
    } else if (ann.kind === "obb") {
      const [cx = 0, cy = 0, w = 0, h = 0, theta = 0] = ann.coords;
      const c = Math.cos(theta);
      const s = Math.sin(theta);
      ctx.beginPath();
      const local: [number, number][] = [
        [-w / 2, -h / 2],
        [w / 2, -h / 2],
        [w / 2, h / 2],
        [-w / 2, h / 2],
      ];
      local.forEach(([dx, dy], i) => {
        const p = imageToScreen(view, { x: cx + dx * c - dy * s, y: cy + dx * s + dy * c });
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      });
      ctx.closePath();
      ctx.stroke();
      if (selected) {
        const handle = this.rotationHandlePoint(ann);
        ctx.setLineDash([]);
        ctx.beginPath();
        ctx.arc(handle.x, handle.y, 5, 0, Math.PI * 2);
        ctx.stroke();
      }
    } else {
      ctx.beginPath();
      for (let i = 0; i + 1 < ann.coords.length; i += 2) {
        const p = imageToScreen(view, { x: ann.coords[i] ?? 0, y: ann.coords[i + 1] ?? 0 });
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      }
      ctx.closePath();
      ctx.stroke();
      if (selected) {
        for (let i = 0; i + 1 < ann.coords.length; i += 2) {
          const p = imageToScreen(view, { x: ann.coords[i] ?? 0, y: ann.coords[i + 1] ?? 0 });
          ctx.fillRect(p.x - 2.5, p.y - 2.5, 5, 5);
        }
      }
    }
    ctx.restore();
  }

  private drawPolygonInProgress(ctx: CanvasRenderingContext2D): void {
    const editor = this.editor;
    if (editor === null || editor.polygonInProgress.length === 0) return;
    const view = this.state.view;
    ctx.save();
    ctx.strokeStyle = "#ffffff";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    editor.polygonInProgress.forEach((vertex, i) => {
      const p = imageToScreen(view, vertex);
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.stroke();
    const first = editor.polygonInProgress[0];
    if (first !== undefined) {
      const p = imageToScreen(view, first);
      ctx.beginPath();
      ctx.arc(p.x, p.y, POLYGON_CLOSE_RADIUS_PX, 0, Math.PI * 2);
      ctx.stroke();
    }
    ctx.restore();
  }

  // -- dashboard -----------------------------------------------------------

  private async showDashboard(): Promise<void> {
    const project = this.project;
    if (project === null) return;
    const stats = await this.api.getStats(project.id);
    const model = buildDashboard(stats);
    byId("dashboard-title").textContent = `${project.name}: ${model.imageCount} images`;
    byId("dashboard-empty").hidden = !model.empty;
    byId("dashboard-charts").hidden = model.empty;
    if (!model.empty) this.renderCharts(model);
    this.showView("dashboard-view");
  }

  private renderCharts(model: DashboardModel): void {
    renderPie(byId("chart-pie") as unknown as SVGSVGElement, byId("pie-legend"), model);
    renderBars(byId("chart-bars") as unknown as SVGSVGElement, model);
    renderHistogram(byId("chart-histogram") as unknown as SVGSVGElement, model);
  }

  // -- feedback ------------------------------------------------------------

  private setStatus(text: string): void {
    byId("status-line").textContent = text;
  }

  private toast(message: string, isError: boolean): void {
    const toast = byId("toast");
    toast.textContent = message;
    toast.classList.toggle("error", isError);
    toast.hidden = false;
    window.setTimeout(() => {
      toast.hidden = true;
    }, 3200);
  }
}

// -- SVG chart rendering -----------------------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";

const svgEl = (name: string, attrs: Record<string, string>): SVGElement => {
  const el = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
};

/** Pie of the server's completion fractions; labels come preformatted. */
const renderPie = (svg: SVGSVGElement, legend: HTMLElement, model: DashboardModel): void => {
  svg.textContent = "";
  legend.textContent = "";
  const cx = 110;
  const cy = 110;
  const r = 90;
  let angle = -Math.PI / 2;
  for (const slice of model.completionPie) {
    const color = STATUS_COLORS[slice.status] ?? "#4f9cf0";
    if (slice.fraction > 0) {
      const sweep = slice.fraction * 2 * Math.PI;
      if (sweep >= 2 * Math.PI - 1e-9) {
        svg.append(svgEl("circle", { cx: String(cx), cy: String(cy), r: String(r), fill: color }));
      } else {
        const x1 = cx + r * Math.cos(angle);
        const y1 = cy + r * Math.sin(angle);
        const x2 = cx + r * Math.cos(angle + sweep);
        const y2 = cy + r * Math.sin(angle + sweep);
        const large = sweep > Math.PI ? 1 : 0;
        svg.append(
          svgEl("path", {
            d: `M ${cx} ${cy} L ${x1} ${y1} A ${r} ${r} 0 ${large} 1 ${x2} ${y2} Z`,
            fill: color,
          }),
        );
      }
      angle += sweep;
    }
    const li = document.createElement("li");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = color;
    li.append(swatch, `${slice.status}: ${slice.label}`);
    legend.append(li);
  }
};

const renderBars = (svg: SVGSVGElement, model: DashboardModel): void => {
  svg.textContent = "";
  const bars = model.classBars;
  if (bars.length === 0) return;
  const peak = Math.max(1, ...bars.map((b) => b.count));
  const band = 360 / bars.length;
  bars.forEach((bar, i) => {
    const height = (bar.count / peak) * 170;
    svg.append(
      svgEl("rect", {
        x: String(i * band + band * 0.15),
        y: String(190 - height),
        width: String(band * 0.7),
        height: String(height),
        fill: "#4f9cf0",
      }),
    );
    const label = svgEl("text", {
      x: String(i * band + band / 2),
      y: "205",
      "text-anchor": "middle",
      fill: "#8a919c",
      "font-size": "11",
    });
    label.textContent = bar.name;
    svg.append(label);
    const count = svgEl("text", {
      x: String(i * band + band / 2),
      y: String(185 - height),
      "text-anchor": "middle",
      fill: "#d8dce3",
      "font-size": "11",
    });
    count.textContent = String(bar.count);
    svg.append(count);
  });
};

const renderHistogram = (svg: SVGSVGElement, model: DashboardModel): void => {
  svg.textContent = "";
  const buckets = model.histogram;
  if (buckets.length === 0) return;
  const peak = Math.max(1, ...buckets.map((b) => b.count));
  const band = 360 / buckets.length;
  buckets.forEach((bucket, i) => {
    const height = (bucket.count / peak) * 170;
    svg.append(
      svgEl("rect", {
        x: String(i * band + band * 0.1),
        y: String(190 - height),
        width: String(band * 0.8),
        height: String(height),
        fill: "#6fbf73",
      }),
    );
    const label = svgEl("text", {
      x: String(i * band + band / 2),
      y: "205",
      "text-anchor": "middle",
      fill: "#8a919c",
      "font-size": "11",
    });
    label.textContent = bucket.range;
    svg.append(label);
    const count = svgEl("text", {
      x: String(i * band + band / 2),
      y: String(185 - height),
      "text-anchor": "middle",
      fill: "#d8dce3",
      "font-size": "11",
    });
    count.textContent = String(bucket.count);
    svg.append(count);
  });
};

new App().init();
