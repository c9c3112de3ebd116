import {
  AnnotationApi,
  ApiError,
  Label,
  PatternInfo,
  SequencePayload,
} from './api';
import { regexProblem, segmentText } from './highlight';

const KEY_BINDINGS: Record<string, Label> = {
  y: 'Yes',
  n: 'No',
  e: 'Neither',
};

const SKELETON = `
  <div id="banner" class="banner" hidden>
    <span id="banner-text"></span>
    <button id="retry" type="button">Retry</button>
  </div>
  <section id="labeling">
    <div id="progress"></div>
    <div id="completion" hidden>All sequences are labeled.</div>
    <pre id="sequence-text"></pre>
    <div id="label-buttons"></div>
    <div id="validation" class="error" hidden></div>
    <button id="submit" type="button">Submit</button>
  </section>
  <section id="patterns">
    <h2>Always patterns</h2>
    <input id="pattern-regex" placeholder="regex" />
    <select id="pattern-label"></select>
    <div id="pattern-error" class="error" hidden></div>
    <div id="pattern-preview"></div>
    <button id="pattern-create" type="button">Create pattern</button>
    <div id="pattern-status"></div>
    <ul id="pattern-list"></ul>
  </section>
`;

export class AnnotationApp {
  private current: SequencePayload | null = null;
  private done = false;
  private selected: Label | null = null;
  private allowOverwrite = false;
  private labels: Label[] = ['Yes', 'No', 'Neither'];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AnnotationApi,
    private readonly annotatorId: string,
  ) {}

  async start(): Promise<void> {
    this.root.innerHTML = SKELETON;
    this.el('submit').addEventListener('click', () => void this.submit());
    this.el('retry').addEventListener('click', () => void this.retry());
    this.el('pattern-create').addEventListener('click', () =>
      void this.createPattern(),
    );
    this.el<HTMLInputElement>('pattern-regex').addEventListener('input', () =>
      void this.previewPattern(),
    );
    this.root.ownerDocument.addEventListener('keydown', (ev) => {
      const label = KEY_BINDINGS[ev.key];
      if (label) this.select(label);
    });
    this.el('pattern-list').addEventListener('click', (ev) => {
      const target = ev.target as HTMLElement;
      const pid = target.dataset.retire;
      if (pid) void this.retirePattern(pid);
    });
    try {
      this.labels = (await this.api.labels()).labels;
    } catch {
      this.showBanner('annotation service unreachable');
      return;
    }
    this.renderLabelControls();
    await this.refreshAll();
  }

  select(label: Label): void {
    if (this.done) return;
    this.selected = label;
    this.allowOverwrite = false;
    this.hide('validation');
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>(
      '#label-buttons button',
    )) {
      btn.setAttribute(
        'aria-pressed',
        btn.dataset.label === label ? 'true' : 'false',
      );
    }
  }

  async submit(): Promise<void> {
    if (this.done || !this.current) return;
    if (!this.selected) {
      this.show('validation', 'choose a class before submitting');
      return;
    }
    try {
      await this.api.submitLabel(
        this.current.sequence_id,
        this.selected,
        this.annotatorId,
        this.allowOverwrite,
      );
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.allowOverwrite = true;
        this.show(
          'validation',
          `${err.message} Submit again to overwrite.`,
        );
      } else if (err instanceof ApiError) {
        this.show('validation', err.message);
      } else {
        // network failure: keep the unsent label for retry
        this.showBanner('annotation service unreachable; label not sent');
      }
      return;
    }
    this.selected = null;
    this.allowOverwrite = false;
    this.hideBanner();
    await this.refreshAll();
  }

  async retry(): Promise<void> {
    this.hideBanner();
    if (this.current && this.selected) {
      await this.submit();
    } else {
      await this.refreshAll();
    }
  }

  async previewPattern(): Promise<void> {
    const regex = this.el<HTMLInputElement>('pattern-regex').value;
    const problem = regexProblem(regex);
    if (problem) {
      this.show('pattern-error', problem);
      this.el('pattern-preview').textContent = '';
      return;
    }
    this.hide('pattern-error');
    try {
      const preview = await this.api.previewPattern(regex, 5);
      const lines = preview.examples.map(
        (s) => `${s.sequence_id}: ${s.text.slice(0, 80)}`,
      );
      this.el('pattern-preview').textContent =
        `${preview.match_count} unlabeled match(es)\n` + lines.join('\n');
    } catch (err) {
      this.show(
        'pattern-error',
        err instanceof ApiError ? err.message : 'service unreachable',
      );
    }
  }

  async createPattern(): Promise<void> {
    const regex = this.el<HTMLInputElement>('pattern-regex').value;
    const label = this.el<HTMLSelectElement>('pattern-label').value as Label;
    const problem = regexProblem(regex);
    if (problem) {
      this.show('pattern-error', problem);
      return;
    }
    try {
      const created = await this.api.createPattern(
        regex,
        label,
        this.annotatorId,
      );
      this.el('pattern-status').textContent = `${created.propagated} labeled`;
      this.el<HTMLInputElement>('pattern-regex').value = '';
      this.el('pattern-preview').textContent = '';
    } catch (err) {
      this.show(
        'pattern-error',
        err instanceof ApiError ? err.message : 'service unreachable',
      );
      return;
    }
    await this.refreshAll();
  }

  async retirePattern(patternId: string): Promise<void> {
    try {
      await this.api.retirePattern(patternId);
    } catch (err) {
      this.show(
        'pattern-error',
        err instanceof ApiError ? err.message : 'service unreachable',
      );
      return;
    }
    await this.refreshAll();
  }

  /** Progress counts shown always come from the service (poll after every
   *  mutation); the UI never derives them locally. */
  async refreshAll(): Promise<void> {
    try {
      const [progress, next, patterns] = await Promise.all([
        this.api.progress(),
        this.api.fetchNext(),
        this.api.listPatterns(),
      ]);
      this.el('progress').textContent =
        `${progress.annotated} / ${progress.total_sequences} labeled`;
      this.done = next.done;
      this.current = next.sequence;
      this.renderSequence();
      this.renderPatterns(patterns);
      this.hideBanner();
    } catch {
      this.showBanner('annotation service unreachable');
    }
  }

  private renderSequence(): void {
    const pre = this.el('sequence-text');
    pre.textContent = '';
    if (this.done || !this.current) {
      this.el('completion').hidden = !this.done;
      return;
    }
    this.el('completion').hidden = true;
    const doc = this.root.ownerDocument;
    for (const seg of segmentText(
      this.current.text,
      this.current.keyword_start,
      this.current.keyword_end,
    )) {
      if (seg.highlight) {
        const mark = doc.createElement('mark');
        mark.textContent = seg.text;
        pre.appendChild(mark);
      } else {
        pre.appendChild(doc.createTextNode(seg.text));
      }
    }
  }

  private renderLabelControls(): void {
    const doc = this.root.ownerDocument;
    const buttons = this.el('label-buttons');
    const picker = this.el<HTMLSelectElement>('pattern-label');
    buttons.textContent = '';
    picker.textContent = '';
    for (const label of this.labels) {
      const btn = doc.createElement('button');
      btn.type = 'button';
      btn.dataset.label = label;
      btn.textContent = label;
      btn.setAttribute('aria-pressed', 'false');
      btn.addEventListener('click', () => this.select(label));
      buttons.appendChild(btn);
      const opt = doc.createElement('option');
      opt.value = label;
      opt.textContent = label;
      picker.appendChild(opt);
    }
  }

  private renderPatterns(patterns: PatternInfo[]): void {
    const doc = this.root.ownerDocument;
    const list = this.el('pattern-list');
    list.textContent = '';
    for (const pat of patterns.filter((p) => !p.retired)) {
      const item = doc.createElement('li');
      item.dataset.patternId = pat.pattern_id;
      item.textContent =
        `${pat.regex} -> ${pat.label} (${pat.author}, ` +
        `${pat.match_count} matched) `;
      const retire = doc.createElement('button');
      retire.type = 'button';
      retire.dataset.retire = pat.pattern_id;
      retire.textContent = 'Retire';
      item.appendChild(retire);
      list.appendChild(item);
    }
  }

  private el<T extends HTMLElement = HTMLElement>(id: string): T {
    return this.root.querySelector(`#${id}`) as T;
  }

  private show(id: string, message: string): void {
    const node = this.el(id);
    node.textContent = message;
    node.hidden = false;
  }

  private hide(id: string): void {
    this.el(id).hidden = true;
  }

  private showBanner(message: string): void {
    this.el('banner-text').textContent = message;
    this.el('banner').hidden = false;
  }

  private hideBanner(): void {
    this.el('banner').hidden = true;
  }
}
