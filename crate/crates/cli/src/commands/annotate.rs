//! `semtrack annotate`: run the semantic stages over an existing tracks
//! file and write the completed annotation. The tracker output is rebuilt
//! from disk, so this command needs no detector or mask tracker.

use semtrack::captioning::{annotate_video, AnnotateConfig};
use semtrack::interact::AlignConfig;
use semtrack::io::annotation::AnnotationFile;
use semtrack::io::video::load_video;

use crate::backend::{self, BackendSpec};
use crate::{AnnotateArgs, CliError, Context};

pub fn run(args: &AnnotateArgs, ctx: &Context) -> Result<(), CliError> {
    let spec = BackendSpec::parse(&args.backend)?;
    let suite = backend::semantic_suite(&spec, &ctx.config, args.record.as_deref())?;

    let frames = load_video(&args.frames)?;
    let mut file = AnnotationFile::load(&args.tracks)?;
    let tracks = file.to_track_set()?;

    let cfg = AnnotateConfig {
        contour_width: ctx.config.grounding.contour_width,
        grounding: args.grounding.unwrap_or(ctx.config.grounding.mode),
        stride: args.stride.unwrap_or(ctx.config.grounding.stride),
        vocabulary: backend::vocabulary(&ctx.config)?,
        align: AlignConfig {
            selector: args.selector.unwrap_or(ctx.config.labels.selector),
            top_k: args.top_k.unwrap_or(ctx.config.labels.top_k),
        },
    };
    let semantic = annotate_video(&frames, &tracks, &suite, &cfg)?;

    // Labels leave alignment as vocabulary ids; an explicit space projects
    // them into its classes before they are written (`full` is identity).
    let space_name = args.label_space.unwrap_or(ctx.config.labels.space);
    let space = backend::label_space(&ctx.config, space_name)?;

    file.summary = Some(semantic.summary);
    file.captions = semantic.captions;
    file.predicates = semantic.predicates;
    file.interactions = semantic
        .interactions
        .into_iter()
        .filter_map(|(pair, labels)| {
            let mapped = space.map_set(&labels);
            (!mapped.is_empty()).then(|| (pair, mapped.into_iter().collect::<Vec<String>>()))
        })
        .collect();
    file.save(&args.out)?;
    println!(
        "annotated {}: {} captions, {} interacting pairs -> {}",
        file.video_id,
        file.captions.len(),
        file.interactions.len(),
        args.out.display()
    );
    Ok(())
}
