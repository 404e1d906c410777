/** DOM rendering for the rating session.
 *
 * Layout mirrors the rating workflow: the source image sits on top as
 * Image-1, the shuffled outputs follow in server slot order with no hint of
 * which system produced them, and each (image, question) pair gets a 1-5
 * Likert row with the endpoint labels spelled out. Number keys 1-5 answer
 * the currently focused question row.
 */

import { SessionController } from "./session.js";
import { answerKey } from "./drafts.js";
import { SCALE_HIGH_LABEL, SCALE_LOW_LABEL, SOURCE_SLOT } from "./types.js";

export class SessionRenderer {
  private focusedRow: { questionId: string; slotIndex: number } | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly controller: SessionController,
  ) {
    document.addEventListener("keydown", (event) => this.onKey(event));
  }

  async start(): Promise<void> {
    await this.controller.loadNext();
    await this.controller.refreshProgress();
    this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.focusedRow || !"12345".includes(event.key)) return;
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "TEXTAREA") return;
    this.controller.answer(this.focusedRow.questionId, this.focusedRow.slotIndex, Number(event.key));
    this.render();
  }

  render(): void {
    const c = this.controller;
    this.root.replaceChildren();
    if (c.state === "loading") {
      this.root.append(el("p", "status", "Loading the next instance…"));
      return;
    }
    if (c.state === "offline") {
      const banner = el("div", "banner error");
      banner.append(
        el("p", "", "The rating service is unreachable. Your answers are saved locally."),
        button("Retry", async () => {
          await c.loadNext();
          this.render();
        }),
      );
      this.root.append(banner);
      return;
    }
    if (c.state === "done") {
      const p = c.progress;
      this.root.append(
        el("h2", "", "All done — thank you!"),
        el("p", "status", p
          ? `Completed ${p.completed} of ${p.total} instances (${p.skipped} skipped).`
          : "No more instances to rate."),
      );
      return;
    }
    const instance = c.instance;
    if (!instance) return;

    if (c.progress) {
      this.root.append(el(
        "p", "progress",
        `Instance ${c.progress.completed + 1} of ${c.progress.total}`,
      ));
    }
    if (instance.context_label) {
      this.root.append(el("p", "context", instance.context_label));
    }

    const gallery = el("div", "gallery");
    gallery.append(this.imageCard(instance.source.label, instance.source.image_url, true));
    for (const slot of instance.slots) {
      gallery.append(this.imageCard(slot.label, slot.image_url, false));
    }
    this.root.append(gallery);

    const sourceQuestion = instance.questions.find((q) => q.id === instance.source_question);
    if (sourceQuestion) {
      const block = el("section", "question-block source-block");
      block.append(el("h3", "", `About ${instance.source.label} (the original)`));
      block.append(this.likertRow(sourceQuestion.id, sourceQuestion.text, SOURCE_SLOT));
      this.root.append(block);
    }

    for (const slot of instance.slots) {
      const block = el("section", "question-block");
      block.append(el("h3", "", `About ${slot.label}`));
      for (const question of instance.questions) {
        block.append(this.likertRow(question.id, question.text, slot.slot_index));
      }
      this.root.append(block);
    }

    const commentBox = document.createElement("textarea");
    commentBox.placeholder =
      "[Optional] Observations or patterns you noticed while rating.";
    commentBox.value = c.draft.comment;
    commentBox.addEventListener("input", () => c.setComment(commentBox.value));
    this.root.append(el("h3", "", "Comments"), commentBox);

    const controls = el("div", "controls");
    const submit = button("Submit ratings", async () => {
      submit.disabled = true;
      await c.submit();
      await c.refreshProgress();
      this.render();
    });
    submit.disabled = !c.isComplete();
    submit.id = "submit";
    const skip = button("Skip this instance", async () => {
      const reason = window.prompt("Why are you skipping? (e.g. image failed to load)") ?? "";
      if (!reason) return;
      await c.skip(reason);
      await c.refreshProgress();
      this.render();
    });
    skip.className = "secondary";
    controls.append(submit, skip);
    this.root.append(controls);
  }

  private imageCard(label: string, url: string, isSource: boolean): HTMLElement {
    const card = el("figure", isSource ? "card source" : "card");
    const img = document.createElement("img");
    img.src = url;
    img.alt = label;
    card.append(img, el("figcaption", "", label));
    return card;
  }

  private likertRow(questionId: string, text: string, slotIndex: number): HTMLElement {
    const row = el("div", "likert-row");
    row.tabIndex = 0;
    row.addEventListener("focus", () => {
      this.focusedRow = { questionId, slotIndex };
    });
    row.append(el("p", "question-text", text));
    const scale = el("div", "scale");
    scale.append(el("span", "endpoint", `1 = ${SCALE_LOW_LABEL}`));
    const current = this.controller.draft.answers[answerKey(questionId, slotIndex)];
    for (let value = 1; value <= 5; value += 1) {
      const option = button(String(value), () => {
        this.controller.answer(questionId, slotIndex, value);
        this.render();
      });
      option.className = value === current ? "likert selected" : "likert";
      scale.append(option);
    }
    scale.append(el("span", "endpoint", `5 = ${SCALE_HIGH_LABEL}`));
    row.append(scale);
    return row;
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}
