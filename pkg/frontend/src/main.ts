import { AnnotationApi } from './api';
import { AnnotationApp } from './app';

const params = new URLSearchParams(window.location.search);
const base = params.get('service') ?? 'http://127.0.0.1:8731';
const annotator = params.get('annotator') ?? 'anonymous';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const app = new AnnotationApp(root, new AnnotationApi(base), annotator);
void app.start();
